#pragma once

#include <map>
#include <string>
#include <vector>

#include "plumesr/data/sequence.hpp"

namespace plumesr::sensors {

inline constexpr double kTraceFloor = 1.0e-10;
inline constexpr double kUpdateBoundarySeconds = 2.5 * 3600.0;

struct DistanceBand {
    std::string name;
    double lo_m = 0.0;
    double hi_m = 0.0;
    bool contains(double d) const { return d >= lo_m && d <= hi_m; }
};

inline const DistanceBand kNearBand{"near", 0.0, 540.0};
inline const DistanceBand kFarBand{"far", 1510.0, 2120.0};

struct SensorSpec {
    std::string id;
    double x = 0.0;  ///< m, absolute domain coordinate (east)
    double y = 0.0;  ///< m, absolute domain coordinate (north)
    double distance_to_source = 0.0;

    void update_distance(double x_src, double y_src);
    /// "near", "far" or "" for sensors outside both bands.
    std::string band() const;
};

struct SensorTrace {
    std::string sensor_id;
    std::vector<double> times;
    std::vector<double> values;
};

/// Ring layout south-east of the source: `per_band` sensors in each distance band.
std::vector<SensorSpec> default_sensor_layout(double x_src, double y_src, int per_band = 3);

/// Throws InvalidArgument when the sensor column is outside the sequence extent.
std::array<std::int64_t, 2> sensor_cell(const ConcentrationSequence& sequence, const SensorSpec& sensor);

/// Linear-space input. value = log10(max(mean_z column, floor)).
SensorTrace extract_trace(const ConcentrationSequence& sequence, const SensorSpec& sensor,
                          double floor = kTraceFloor);
std::vector<SensorTrace> extract_traces(const ConcentrationSequence& sequence,
                                        const std::vector<SensorSpec>& sensors, double floor = kTraceFloor);

struct TraceError {
    std::string sensor_id;
    std::string model;
    double overall = 0.0;
    double before = 0.0;  ///< t <= boundary
    double after = 0.0;   ///< t > boundary
};

/// Mean absolute error per sensor and model. `models` maps a model name to
/// traces listed in the same sensor order as `truth`.
std::vector<TraceError> compare_traces(const std::vector<SensorTrace>& truth,
                                       const std::map<std::string, std::vector<SensorTrace>>& models,
                                       double boundary_s = kUpdateBoundarySeconds);

std::vector<SensorSpec> read_sensor_list(const std::string& path);
void write_sensor_list(const std::string& path, const std::vector<SensorSpec>& sensors);
/// CSV rows: sensor,time,value,model
std::string traces_csv(const std::map<std::string, std::vector<SensorTrace>>& by_model);

}  // namespace plumesr::sensors
