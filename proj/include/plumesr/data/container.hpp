#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "plumesr/data/normalization.hpp"
#include "plumesr/data/sequence.hpp"
#include "plumesr/data/split.hpp"
#include "plumesr/data/transforms.hpp"
#include "plumesr/plume/types.hpp"

namespace plumesr::data {

inline const Shape3 kLowResShape{8, 32, 32};
inline const Shape3 kHighResShape{32, 128, 128};

/// Paired low/high-resolution sequences of one simulated run.
struct DualResolutionSample {
    std::string run_id;
    plume::WindCondition condition;
    std::uint64_t seed = 0;
    ConcentrationSequence lr;
    ConcentrationSequence hr;

    /// Both sequences share a time axis and have the given spatial shapes.
    void validate(Shape3 lr_shape = kLowResShape, Shape3 hr_shape = kHighResShape) const;
};

/// Crop then resize a raw simulation into its LR/HR pair.
DualResolutionSample build_sample(const ConcentrationSequence& raw, const CropSpec& crop, Shape3 lr_shape,
                                  Shape3 hr_shape);

/// "PLM1" run file:
///   bytes 0..3   magic "PLM1"
///   bytes 4..11  header length N, uint64 little-endian
///   next N bytes UTF-8 JSON header (shapes, dt, cell sizes, origin, condition,
///                optional normalization, free-form provenance)
///   then LR values then HR values, float32 little-endian, (t, z, y, x) order.
struct RunFile {
    DualResolutionSample sample;
    std::optional<NormalizationSpec> normalization;
    nlohmann::json provenance = nlohmann::json::object();
};

/// Writes to a temporary sibling then renames into place.
void write_run_file(const std::filesystem::path& path, const RunFile& file);
RunFile read_run_file(const std::filesystem::path& path);
/// Header only, without touching the float payload.
nlohmann::json read_run_header(const std::filesystem::path& path);

enum class Resolution { Low, High };

/// Random access to single frames of a run file without loading the payload.
class RunFileReader {
public:
    explicit RunFileReader(std::filesystem::path path);

    const nlohmann::json& header() const { return header_; }
    Shape3 shape(Resolution r) const { return r == Resolution::Low ? lr_shape_ : hr_shape_; }
    std::int64_t steps() const { return steps_; }
    /// Linear-space frame t of the requested resolution.
    std::vector<float> frame(Resolution r, std::int64_t t) const;
    void read_frame(Resolution r, std::int64_t t, std::span<float> out) const;

private:
    std::filesystem::path path_;
    nlohmann::json header_;
    std::uint64_t payload_offset_ = 0;
    std::int64_t steps_ = 0;
    Shape3 lr_shape_, hr_shape_;
};

struct ManifestEntry {
    std::string run_id;
    std::string file;  ///< relative to the manifest directory
    Split split = Split::Train;
    std::uint64_t seed = 0;
    plume::WindCondition condition;
};

/// Corpus index: run ids, split assignment, seeds, normalization fitted on
/// the training split, plus provenance (config hash and seeds).
struct Manifest {
    std::vector<ManifestEntry> runs;
    NormalizationSpec normalization;
    nlohmann::json provenance = nlohmann::json::object();

    std::vector<const ManifestEntry*> select(Split s) const;
    std::array<std::size_t, 3> split_counts() const;
};

nlohmann::json to_json(const NormalizationSpec& spec);
NormalizationSpec normalization_from_json(const nlohmann::json& j);

void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);

/// Atomic text write (temp file + rename).
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace plumesr::data
