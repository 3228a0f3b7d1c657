#include "plumesr/sensors/sensors.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "plumesr/data/container.hpp"
#include "plumesr/error.hpp"

namespace plumesr::sensors {

void SensorSpec::update_distance(double x_src, double y_src) {
    distance_to_source = std::hypot(x - x_src, y - y_src);
}

std::string SensorSpec::band() const {
    if (kNearBand.contains(distance_to_source)) return kNearBand.name;
    if (kFarBand.contains(distance_to_source)) return kFarBand.name;
    return "";
}

std::vector<SensorSpec> default_sensor_layout(double x_src, double y_src, int per_band) {
    if (per_band < 1) throw InvalidArgument("per_band must be >= 1");
    std::vector<SensorSpec> out;
    // Bearings measured clockwise from north, inside the south-east quadrant the crop covers.
    auto place = [&](const char* prefix, double r_lo, double r_hi) {
        for (int s = 0; s < per_band; ++s) {
            const double frac = per_band == 1 ? 0.5 : static_cast<double>(s) / (per_band - 1);
            const double r = r_lo + frac * (r_hi - r_lo);
            const double bearing = (158.0 + 17.0 * frac) * std::numbers::pi / 180.0;
            SensorSpec sp;
            sp.id = std::string(prefix) + std::to_string(s + 1);
            sp.x = x_src + r * std::sin(bearing);
            sp.y = y_src + r * std::cos(bearing);
            sp.update_distance(x_src, y_src);
            out.push_back(sp);
        }
    };
    place("near", 250.0, 540.0);
    place("far", 1600.0, 2100.0);
    return out;
}

std::array<std::int64_t, 2> sensor_cell(const ConcentrationSequence& sequence, const SensorSpec& sensor) {
    const auto origin = sequence.origin();
    const auto cell = sequence.cell_size();
    const auto g = sequence.grid();
    const double fx = (sensor.x - origin[2]) / cell[2];
    const double fy = (sensor.y - origin[1]) / cell[1];
    if (!(fx >= 0.0 && fy >= 0.0 && fx < static_cast<double>(g.x) && fy < static_cast<double>(g.y))) {
        std::ostringstream os;
        os << "sensor '" << sensor.id << "' at (" << sensor.x << ", " << sensor.y << ") lies outside the domain";
        throw InvalidArgument(os.str());
    }
    return {static_cast<std::int64_t>(fy), static_cast<std::int64_t>(fx)};
}

SensorTrace extract_trace(const ConcentrationSequence& sequence, const SensorSpec& sensor, double floor) {
    const auto [j, i] = sensor_cell(sequence, sensor);
    SensorTrace tr;
    tr.sensor_id = sensor.id;
    const auto g = sequence.grid();
    for (std::int64_t t = 0; t < sequence.steps(); ++t) {
        double sum = 0.0;
        for (std::int64_t k = 0; k < g.z; ++k) sum += sequence.at(t, k, j, i);
        tr.times.push_back(static_cast<double>(t) * sequence.dt_output());
        tr.values.push_back(std::log10(std::max(sum / static_cast<double>(g.z), floor)));
    }
    return tr;
}

std::vector<SensorTrace> extract_traces(const ConcentrationSequence& sequence,
                                        const std::vector<SensorSpec>& sensors, double floor) {
    std::vector<SensorTrace> out;
    out.reserve(sensors.size());
    for (const auto& s : sensors) out.push_back(extract_trace(sequence, s, floor));
    return out;
}

std::vector<TraceError> compare_traces(const std::vector<SensorTrace>& truth,
                                       const std::map<std::string, std::vector<SensorTrace>>& models,
                                       double boundary_s) {
    std::vector<TraceError> out;
    for (const auto& [name, traces] : models) {
        if (traces.size() != truth.size()) {
            throw InvalidArgument("model '" + name + "' has " + std::to_string(traces.size()) + " traces, truth has " +
                                  std::to_string(truth.size()));
        }
        for (std::size_t s = 0; s < truth.size(); ++s) {
            const auto& a = truth[s];
            const auto& b = traces[s];
            if (a.sensor_id != b.sensor_id) throw InvalidArgument("sensor order mismatch: " + a.sensor_id + " vs " + b.sensor_id);
            if (a.times != b.times || a.values.size() != b.values.size()) {
                throw InvalidArgument("time-base mismatch for sensor " + a.sensor_id + " (" + name + ")");
            }
            TraceError e{a.sensor_id, name, 0.0, 0.0, 0.0};
            std::size_t nb = 0, na = 0;
            for (std::size_t t = 0; t < a.values.size(); ++t) {
                const double d = std::abs(a.values[t] - b.values[t]);
                e.overall += d;
                if (a.times[t] > boundary_s) {
                    e.after += d;
                    ++na;
                } else {
                    e.before += d;
                    ++nb;
                }
            }
            if (!a.values.empty()) e.overall /= static_cast<double>(a.values.size());
            if (nb) e.before /= static_cast<double>(nb);
            if (na) e.after /= static_cast<double>(na);
            out.push_back(e);
        }
    }
    return out;
}

std::vector<SensorSpec> read_sensor_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open sensor list " + path);
    std::vector<SensorSpec> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("id,", 0) == 0) continue;
        std::stringstream ss(line);
        SensorSpec s;
        std::string x, y;
        if (!std::getline(ss, s.id, ',') || !std::getline(ss, x, ',') || !std::getline(ss, y, ',')) {
            throw InvalidArgument("malformed sensor line: " + line);
        }
        s.x = std::stod(x);
        s.y = std::stod(y);
        out.push_back(s);
    }
    return out;
}

void write_sensor_list(const std::string& path, const std::vector<SensorSpec>& sensors) {
    std::ostringstream os;
    os << std::setprecision(10) << "id,x,y\n";
    for (const auto& s : sensors) os << s.id << ',' << s.x << ',' << s.y << '\n';
    data::write_text_atomic(path, os.str());
}

std::string traces_csv(const std::map<std::string, std::vector<SensorTrace>>& by_model) {
    std::ostringstream os;
    os << std::setprecision(10) << "sensor,time,value,model\n";
    for (const auto& [model, traces] : by_model)
        for (const auto& tr : traces)
            for (std::size_t t = 0; t < tr.values.size(); ++t)
                os << tr.sensor_id << ',' << tr.times[t] << ',' << tr.values[t] << ',' << model << '\n';
    return os.str();
}

}  // namespace plumesr::sensors
