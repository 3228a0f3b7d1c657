#include "plumesr/plume/solver.hpp"

#include <algorithm>
#include <cmath>

#include "plumesr/error.hpp"

namespace plumesr::plume {

double stable_substep(const VelocityField& wind, const SimConfig& config) {
    const auto cell = config.cell_size();
    const auto speeds = wind.max_speeds();
    const double K = config.diffusivity;
    const double rate = speeds[2] / cell[2] + speeds[1] / cell[1] + speeds[0] / cell[0] +
                        2.0 * K * (1.0 / (cell[0] * cell[0]) + 1.0 / (cell[1] * cell[1]) + 1.0 / (cell[2] * cell[2]));
    return rate > 0.0 ? config.cfl_limit / rate : config.dt_output;
}

namespace {

/// Per-face transfer coefficients for one substep, in concentration units:
/// advective Courant number (signed) and diffusive number (zero on closed faces).
struct FaceCoefficients {
    std::vector<double> courant;
    std::vector<double> diffusion;
};

std::array<std::int64_t, 3> locate_source(const TerrainField& terrain, const VelocityField& wind,
                                          const SourceSpec& source, const SimConfig& config) {
    const auto cell = config.cell_size();
    const Shape3 g = config.grid_cells;
    const auto i = static_cast<std::int64_t>(std::floor(source.x_release / cell[2]));
    const auto j = static_cast<std::int64_t>(std::floor(source.y_release / cell[1]));
    if (source.x_release < 0.0 || source.y_release < 0.0 || i >= g.x || j >= g.y) {
        throw InvalidConfig("source position outside the domain");
    }
    if (!(source.emission_rate > 0.0)) throw InvalidConfig("emission_rate must be positive");
    std::int64_t k = -1;
    if (source.z_release < 0.0) {
        for (std::int64_t kk = 0; kk < g.z; ++kk) {
            if (!wind.is_solid(kk, j, i)) {
                k = kk;
                break;
            }
        }
        if (k < 0) throw InvalidConfig("source column is entirely below the terrain");
    } else {
        k = static_cast<std::int64_t>(std::floor(source.z_release / cell[0]));
        if (k >= g.z) throw InvalidConfig("source height above the domain top");
        if (wind.is_solid(k, j, i)) {
            throw InvalidConfig("source height " + std::to_string(source.z_release) + " m is below the terrain (" +
                                std::to_string(terrain.height(j, i)) + " m)");
        }
    }
    return {k, j, i};
}

}  // namespace

SimulationResult simulate_release(const TerrainField& terrain, const VelocityField& wind, const SourceSpec& source,
                                  const SimConfig& config) {
    config.validate();
    const Shape3 g = config.grid_cells;
    if (!(wind.grid == g) || terrain.ny != g.y || terrain.nx != g.x) {
        throw InvalidConfig("terrain / wind grid does not match the simulation grid");
    }
    const auto cell = config.cell_size();
    const double dz = cell[0], dy = cell[1], dx = cell[2];
    const double volume = dz * dy * dx;

    // Substep selection and stability guard.
    const double dt_max = stable_substep(wind, config);
    std::int64_t nsub = 0;
    if (config.dt_solver > 0.0) {
        if (config.dt_solver > dt_max * (1.0 + 1e-12)) {
            const auto sp = wind.max_speeds();
            const double courant = std::max({sp[0] / dz, sp[1] / dy, sp[2] / dx}) * config.dt_solver;
            throw InvalidConfig("dt_solver " + std::to_string(config.dt_solver) + " s violates the stability bound (" +
                                std::to_string(dt_max) + " s max; advective Courant " + std::to_string(courant) +
                                ", limit " + std::to_string(config.cfl_limit) + ")");
        }
        nsub = std::llround(config.dt_output / config.dt_solver);
        if (nsub < 1 || std::abs(static_cast<double>(nsub) * config.dt_solver - config.dt_output) > 1e-9 * config.dt_output) {
            throw InvalidConfig("dt_output must be an integer multiple of dt_solver");
        }
    } else {
        nsub = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(config.dt_output / dt_max - 1e-12)));
    }
    const double dt = config.dt_output / static_cast<double>(nsub);

    const auto src = locate_source(terrain, wind, source, config);
    const std::size_t src_id = static_cast<std::size_t>((src[0] * g.y + src[1]) * g.x + src[2]);

    const std::int64_t nz = g.z, ny = g.y, nx = g.x;
    const double K = config.diffusivity;

    FaceCoefficients fx, fy, fz;
    fx.courant.resize(wind.u.size());
    fx.diffusion.assign(wind.u.size(), 0.0);
    fy.courant.resize(wind.v.size());
    fy.diffusion.assign(wind.v.size(), 0.0);
    fz.courant.resize(wind.w.size());
    fz.diffusion.assign(wind.w.size(), 0.0);
    for (std::size_t f = 0; f < wind.u.size(); ++f) fx.courant[f] = wind.u[f] * dt / dx;
    for (std::size_t f = 0; f < wind.v.size(); ++f) fy.courant[f] = wind.v[f] * dt / dy;
    for (std::size_t f = 0; f < wind.w.size(); ++f) fz.courant[f] = wind.w[f] * dt / dz;
    for (std::int64_t k = 0; k < nz; ++k)
        for (std::int64_t j = 0; j < ny; ++j)
            for (std::int64_t i = 1; i < nx; ++i)
                if (!wind.is_solid(k, j, i - 1) && !wind.is_solid(k, j, i))
                    fx.diffusion[static_cast<std::size_t>((k * ny + j) * (nx + 1) + i)] = K * dt / (dx * dx);
    for (std::int64_t k = 0; k < nz; ++k)
        for (std::int64_t j = 1; j < ny; ++j)
            for (std::int64_t i = 0; i < nx; ++i)
                if (!wind.is_solid(k, j - 1, i) && !wind.is_solid(k, j, i))
                    fy.diffusion[static_cast<std::size_t>((k * (ny + 1) + j) * nx + i)] = K * dt / (dy * dy);
    for (std::int64_t k = 1; k < nz; ++k)
        for (std::int64_t j = 0; j < ny; ++j)
            for (std::int64_t i = 0; i < nx; ++i)
                if (!wind.is_solid(k - 1, j, i) && !wind.is_solid(k, j, i))
                    fz.diffusion[static_cast<std::size_t>((k * ny + j) * nx + i)] = K * dt / (dz * dz);

    const double decay_factor =
        config.decay_halflife > 0.0 ? std::exp(-std::log(2.0) * dt / config.decay_halflife) : 1.0;
    const double inject = source.emission_rate * dt / volume;

    SimulationResult result;
    result.sequence = ConcentrationSequence(config.n_output_steps, g, config.dt_output, cell);
    result.dt_solver = dt;
    result.substeps_per_output = nsub;
    result.source_cell = src;
    result.balance.resize(static_cast<std::size_t>(config.n_output_steps));

    const std::size_t ncell = static_cast<std::size_t>(g.cells());
    std::vector<double> c(ncell, 0.0), dc(ncell, 0.0);
    // Bookkeeping in concentration units (mass / volume).
    double injected = 0.0, outflow = 0.0, decayed = 0.0;

    auto donor = [](double a, double cl, double cr) { return a > 0.0 ? a * cl : a * cr; };

    for (std::int64_t out = 1; out < config.n_output_steps; ++out) {
        for (std::int64_t s = 0; s < nsub; ++s) {
            std::fill(dc.begin(), dc.end(), 0.0);
            double out_step = 0.0;
            // x faces
            for (std::int64_t k = 0; k < nz; ++k) {
                for (std::int64_t j = 0; j < ny; ++j) {
                    const std::size_t row = static_cast<std::size_t>((k * ny + j) * nx);
                    const std::size_t frow = static_cast<std::size_t>((k * ny + j) * (nx + 1));
                    const double* cr = c.data() + row;
                    double* d = dc.data() + row;
                    const double* a = fx.courant.data() + frow;
                    const double* kd = fx.diffusion.data() + frow;
                    const double west = donor(a[0], 0.0, cr[0]);
                    d[0] += west;
                    out_step -= west;
                    for (std::int64_t i = 1; i < nx; ++i) {
                        const double flux = donor(a[i], cr[i - 1], cr[i]) + kd[i] * (cr[i - 1] - cr[i]);
                        d[i - 1] -= flux;
                        d[i] += flux;
                    }
                    const double east = donor(a[nx], cr[nx - 1], 0.0);
                    d[nx - 1] -= east;
                    out_step += east;
                }
            }
            // y faces
            for (std::int64_t k = 0; k < nz; ++k) {
                const std::size_t plane = static_cast<std::size_t>(k * ny * nx);
                const std::size_t fplane = static_cast<std::size_t>(k * (ny + 1) * nx);
                for (std::int64_t j = 0; j <= ny; ++j) {
                    const double* a = fy.courant.data() + fplane + static_cast<std::size_t>(j * nx);
                    const double* kd = fy.diffusion.data() + fplane + static_cast<std::size_t>(j * nx);
                    if (j == 0) {
                        const double* cr = c.data() + plane;
                        double* d = dc.data() + plane;
                        for (std::int64_t i = 0; i < nx; ++i) {
                            const double flux = donor(a[i], 0.0, cr[i]);
                            d[i] += flux;
                            out_step -= flux;
                        }
                    } else if (j == ny) {
                        const double* cl = c.data() + plane + static_cast<std::size_t>((ny - 1) * nx);
                        double* d = dc.data() + plane + static_cast<std::size_t>((ny - 1) * nx);
                        for (std::int64_t i = 0; i < nx; ++i) {
                            const double flux = donor(a[i], cl[i], 0.0);
                            d[i] -= flux;
                            out_step += flux;
                        }
                    } else {
                        const double* cl = c.data() + plane + static_cast<std::size_t>((j - 1) * nx);
                        const double* cr = cl + nx;
                        double* dl = dc.data() + plane + static_cast<std::size_t>((j - 1) * nx);
                        double* dr = dl + nx;
                        for (std::int64_t i = 0; i < nx; ++i) {
                            const double flux = donor(a[i], cl[i], cr[i]) + kd[i] * (cl[i] - cr[i]);
                            dl[i] -= flux;
                            dr[i] += flux;
                        }
                    }
                }
            }
            // z faces; the ground face k = 0 is closed
            const std::size_t nplane = static_cast<std::size_t>(ny * nx);
            for (std::int64_t k = 1; k <= nz; ++k) {
                const double* a = fz.courant.data() + static_cast<std::size_t>(k) * nplane;
                const double* kd = fz.diffusion.data() + static_cast<std::size_t>(k) * nplane;
                const double* cl = c.data() + static_cast<std::size_t>(k - 1) * nplane;
                double* dl = dc.data() + static_cast<std::size_t>(k - 1) * nplane;
                if (k == nz) {
                    for (std::size_t p = 0; p < nplane; ++p) {
                        const double flux = donor(a[p], cl[p], 0.0);
                        dl[p] -= flux;
                        out_step += flux;
                    }
                } else {
                    const double* cr = cl + nplane;
                    double* dr = dl + nplane;
                    for (std::size_t p = 0; p < nplane; ++p) {
                        const double flux = donor(a[p], cl[p], cr[p]) + kd[p] * (cl[p] - cr[p]);
                        dl[p] -= flux;
                        dr[p] += flux;
                    }
                }
            }

            for (std::size_t p = 0; p < ncell; ++p) c[p] += dc[p];
            c[src_id] += inject;
            injected += inject;
            outflow += out_step;
            if (decay_factor < 1.0) {
                double before = 0.0;
                for (std::size_t p = 0; p < ncell; ++p) {
                    before += c[p];
                    c[p] *= decay_factor;
                }
                decayed += before * (1.0 - decay_factor);
            }
        }

        double retained = 0.0;
        auto frame = result.sequence.frame(out);
        for (std::size_t p = 0; p < ncell; ++p) {
            const double v = c[p];
            if (!std::isfinite(v)) {
                throw NumericalFailure("non-finite concentration at output step " + std::to_string(out), out);
            }
            retained += v;
            frame[p] = static_cast<float>(v);
        }
        MassBalance mb{injected * volume, retained * volume, outflow * volume, decayed * volume};
        result.balance[static_cast<std::size_t>(out)] = mb;
        if (mb.relative_residual() > 1e-6) {
            throw NumericalFailure("mass balance violated at output step " + std::to_string(out) +
                                       ": relative residual " + std::to_string(mb.relative_residual()),
                                   out);
        }
    }
    return result;
}

}  // namespace plumesr::plume
