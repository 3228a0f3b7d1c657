#include "plumesr/data/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "plumesr/data/transforms.hpp"
#include "plumesr/error.hpp"

namespace plumesr::data {

using nlohmann::json;

void DualResolutionSample::validate(Shape3 lr_shape, Shape3 hr_shape) const {
    if (!(lr.grid() == lr_shape)) throw InvalidArgument("LR grid " + lr.grid().str() + " != expected " + lr_shape.str());
    if (!(hr.grid() == hr_shape)) throw InvalidArgument("HR grid " + hr.grid().str() + " != expected " + hr_shape.str());
    if (lr.steps() != hr.steps()) throw InvalidArgument("LR and HR sequences have different lengths");
}

DualResolutionSample build_sample(const ConcentrationSequence& raw, const CropSpec& crop, Shape3 lr_shape,
                                  Shape3 hr_shape) {
    const ConcentrationSequence cropped = crop_volume(raw, crop);
    DualResolutionSample s;
    s.lr = resize_sequence(cropped, lr_shape);
    s.hr = resize_sequence(cropped, hr_shape);
    return s;
}

namespace {

constexpr char kMagic[4] = {'P', 'L', 'M', '1'};

json shape_json(const ConcentrationSequence& s) {
    return json::array({s.steps(), s.grid().z, s.grid().y, s.grid().x});
}

json sequence_meta(const ConcentrationSequence& s) {
    return {{"shape", shape_json(s)},
            {"dt_output", s.dt_output()},
            {"cell_size_zyx", s.cell_size()},
            {"origin_zyx", s.origin()}};
}

ConcentrationSequence sequence_from_meta(const json& m) {
    const auto shape = m.at("shape").get<std::vector<std::int64_t>>();
    if (shape.size() != 4) throw IoError("sequence shape must have 4 entries");
    return ConcentrationSequence(shape[0], {shape[1], shape[2], shape[3]}, m.at("dt_output").get<double>(),
                                 m.at("cell_size_zyx").get<Vec3>(), m.at("origin_zyx").get<Vec3>());
}

void write_floats(std::ostream& os, const std::vector<float>& v) {
    if constexpr (std::endian::native == std::endian::little) {
        os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
    } else {
        for (float f : v) {
            char b[4];
            std::memcpy(b, &f, 4);
            std::swap(b[0], b[3]);
            std::swap(b[1], b[2]);
            os.write(b, 4);
        }
    }
}

void read_floats(std::istream& is, std::vector<float>& v) {
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
    if (!is) throw IoError("truncated float payload");
    if constexpr (std::endian::native != std::endian::little) {
        for (float& f : v) {
            char b[4];
            std::memcpy(b, &f, 4);
            std::swap(b[0], b[3]);
            std::swap(b[1], b[2]);
            std::memcpy(&f, b, 4);
        }
    }
}

std::uint64_t read_u64_le(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw IoError("truncated header length");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

void write_u64_le(std::ostream& os, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    os.write(b, 8);
}

json read_header_from(std::istream& is, const std::filesystem::path& path) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) throw IoError(path.string() + " is not a PLM1 run file");
    const std::uint64_t n = read_u64_le(is);
    std::string header(n, '\0');
    is.read(header.data(), static_cast<std::streamsize>(n));
    if (!is) throw IoError("truncated header in " + path.string());
    return json::parse(header);
}

std::filesystem::path temp_sibling(const std::filesystem::path& path) {
    auto tmp = path;
    tmp += ".tmp";
    return tmp;
}

}  // namespace

json to_json(const NormalizationSpec& spec) {
    return {{"log_floor", spec.log_floor}, {"min_val", spec.min_val}, {"max_val", spec.max_val}};
}

NormalizationSpec normalization_from_json(const json& j) {
    NormalizationSpec s{j.at("log_floor").get<double>(), j.at("min_val").get<double>(), j.at("max_val").get<double>()};
    s.validate();
    return s;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = temp_sibling(path);
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
        os << text;
        if (!os) throw IoError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void write_run_file(const std::filesystem::path& path, const RunFile& file) {
    const auto& s = file.sample;
    if (s.lr.steps() != s.hr.steps()) throw InvalidArgument("LR and HR sequences have different lengths");
    json header = {{"format", "PLM1"},
                   {"version", 1},
                   {"run_id", s.run_id},
                   {"seed", s.seed},
                   {"condition", {{"speed_ms", s.condition.speed_ms}, {"direction_deg", s.condition.direction_deg}}},
                   {"lr", sequence_meta(s.lr)},
                   {"hr", sequence_meta(s.hr)},
                   {"normalization", file.normalization ? to_json(*file.normalization) : json(nullptr)},
                   {"provenance", file.provenance}};
    const std::string text = header.dump();

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = temp_sibling(path);
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
        os.write(kMagic, 4);
        write_u64_le(os, text.size());
        os.write(text.data(), static_cast<std::streamsize>(text.size()));
        write_floats(os, s.lr.values());
        write_floats(os, s.hr.values());
        if (!os) throw IoError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

json read_run_header(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open run file " + path.string());
    return read_header_from(is, path);
}

RunFile read_run_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open run file " + path.string());
    const json h = read_header_from(is, path);
    RunFile f;
    f.sample.run_id = h.at("run_id").get<std::string>();
    f.sample.seed = h.at("seed").get<std::uint64_t>();
    f.sample.condition = {h.at("condition").at("speed_ms").get<double>(),
                          h.at("condition").at("direction_deg").get<double>()};
    f.sample.lr = sequence_from_meta(h.at("lr"));
    f.sample.hr = sequence_from_meta(h.at("hr"));
    read_floats(is, f.sample.lr.values());
    read_floats(is, f.sample.hr.values());
    if (!h.at("normalization").is_null()) f.normalization = normalization_from_json(h.at("normalization"));
    f.provenance = h.value("provenance", json::object());
    return f;
}

RunFileReader::RunFileReader(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream is(path_, std::ios::binary);
    if (!is) throw IoError("cannot open run file " + path_.string());
    header_ = read_header_from(is, path_);
    payload_offset_ = static_cast<std::uint64_t>(is.tellg());
    const auto lr = header_.at("lr").at("shape").get<std::vector<std::int64_t>>();
    const auto hr = header_.at("hr").at("shape").get<std::vector<std::int64_t>>();
    if (lr.size() != 4 || hr.size() != 4) throw IoError("sequence shape must have 4 entries");
    steps_ = lr[0];
    lr_shape_ = {lr[1], lr[2], lr[3]};
    hr_shape_ = {hr[1], hr[2], hr[3]};
}

void RunFileReader::read_frame(Resolution r, std::int64_t t, std::span<float> out) const {
    if (t < 0 || t >= steps_) throw InvalidArgument("frame index " + std::to_string(t) + " out of range");
    const auto cells = static_cast<std::uint64_t>(shape(r).cells());
    if (out.size() != cells) throw InvalidArgument("frame buffer has the wrong size");
    std::uint64_t offset = payload_offset_;
    if (r == Resolution::High) offset += static_cast<std::uint64_t>(steps_ * lr_shape_.cells()) * sizeof(float);
    offset += static_cast<std::uint64_t>(t) * cells * sizeof(float);
    std::ifstream is(path_, std::ios::binary);
    if (!is) throw IoError("cannot open run file " + path_.string());
    is.seekg(static_cast<std::streamoff>(offset));
    std::vector<float> tmp(cells);
    read_floats(is, tmp);
    std::copy(tmp.begin(), tmp.end(), out.begin());
}

std::vector<float> RunFileReader::frame(Resolution r, std::int64_t t) const {
    std::vector<float> out(static_cast<std::size_t>(shape(r).cells()));
    read_frame(r, t, out);
    return out;
}

std::vector<const ManifestEntry*> Manifest::select(Split s) const {
    std::vector<const ManifestEntry*> out;
    for (const auto& r : runs)
        if (r.split == s) out.push_back(&r);
    return out;
}

std::array<std::size_t, 3> Manifest::split_counts() const {
    return {select(Split::Train).size(), select(Split::Val).size(), select(Split::Test).size()};
}

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
    json runs = json::array();
    for (const auto& r : m.runs) {
        runs.push_back({{"run_id", r.run_id},
                        {"file", r.file},
                        {"split", to_string(r.split)},
                        {"seed", r.seed},
                        {"condition", {{"speed_ms", r.condition.speed_ms}, {"direction_deg", r.condition.direction_deg}}}});
    }
    const auto counts = m.split_counts();
    json j = {{"format", "plumesr-manifest"},
              {"version", 1},
              {"runs", runs},
              {"split_sizes", {{"train", counts[0]}, {"val", counts[1]}, {"test", counts[2]}}},
              {"normalization", to_json(m.normalization)},
              {"provenance", m.provenance}};
    write_text_atomic(path, j.dump(2) + "\n");
}

Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open manifest " + path.string());
    const json j = json::parse(is);
    Manifest m;
    for (const auto& r : j.at("runs")) {
        ManifestEntry e;
        e.run_id = r.at("run_id").get<std::string>();
        e.file = r.at("file").get<std::string>();
        e.split = split_from_string(r.at("split").get<std::string>());
        e.seed = r.at("seed").get<std::uint64_t>();
        e.condition = {r.at("condition").at("speed_ms").get<double>(), r.at("condition").at("direction_deg").get<double>()};
        m.runs.push_back(std::move(e));
    }
    m.normalization = normalization_from_json(j.at("normalization"));
    m.provenance = j.value("provenance", json::object());
    return m;
}

}  // namespace plumesr::data
