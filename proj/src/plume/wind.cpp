#include "plumesr/plume/wind.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "plumesr/error.hpp"

namespace plumesr::plume {

double log_profile_speed(double height, double speed_ref, double roughness_length, double reference_height) {
    if (height <= roughness_length) return 0.0;
    return speed_ref * std::log(height / roughness_length) / std::log(reference_height / roughness_length);
}

std::array<double, 2> transport_direction(double direction_deg) {
    const double rad = direction_deg * std::numbers::pi / 180.0;
    return {-std::sin(rad), -std::cos(rad)};
}

double VelocityField::divergence(std::int64_t k, std::int64_t j, std::int64_t i) const {
    return (u_at(k, j, i + 1) - u_at(k, j, i)) / cell[2] + (v_at(k, j + 1, i) - v_at(k, j, i)) / cell[1] +
           (w_at(k + 1, j, i) - w_at(k, j, i)) / cell[0];
}

double VelocityField::max_divergence() const {
    double worst = 0.0;
    for (std::int64_t k = 0; k < grid.z; ++k)
        for (std::int64_t j = 0; j < grid.y; ++j)
            for (std::int64_t i = 0; i < grid.x; ++i)
                if (!is_solid(k, j, i)) worst = std::max(worst, std::abs(divergence(k, j, i)));
    return worst;
}

Vec3 VelocityField::max_speeds() const {
    auto amax = [](const std::vector<double>& a) {
        double m = 0.0;
        for (double x : a) m = std::max(m, std::abs(x));
        return m;
    };
    return {amax(w), amax(v), amax(u)};
}

std::array<double, 3> VelocityField::cell_velocity(std::int64_t k, std::int64_t j, std::int64_t i) const {
    return {0.5 * (u_at(k, j, i) + u_at(k, j, i + 1)), 0.5 * (v_at(k, j, i) + v_at(k, j + 1, i)),
            0.5 * (w_at(k, j, i) + w_at(k + 1, j, i))};
}

VelocityField build_wind_field(const TerrainField& terrain, const WindCondition& condition, const SimConfig& config,
                               WindBuildReport* report) {
    config.validate();
    const Shape3 g = config.grid_cells;
    if (terrain.ny != g.y || terrain.nx != g.x) {
        throw InvalidArgument("terrain grid does not match the configured grid");
    }
    const auto cell = config.cell_size();
    const double dz = cell[0], dy = cell[1], dx = cell[2];

    VelocityField f;
    f.grid = g;
    f.cell = cell;
    f.u.assign(static_cast<std::size_t>(g.z * g.y * (g.x + 1)), 0.0);
    f.v.assign(static_cast<std::size_t>(g.z * (g.y + 1) * g.x), 0.0);
    f.w.assign(static_cast<std::size_t>((g.z + 1) * g.y * g.x), 0.0);
    f.solid.assign(static_cast<std::size_t>(g.cells()), 0);

    for (std::int64_t k = 0; k < g.z; ++k) {
        const double zc = (static_cast<double>(k) + 0.5) * dz;
        for (std::int64_t j = 0; j < g.y; ++j)
            for (std::int64_t i = 0; i < g.x; ++i)
                f.solid[static_cast<std::size_t>((k * g.y + j) * g.x + i)] = zc < terrain.height(j, i) ? 1 : 0;
    }

    const auto dir = transport_direction(condition.direction_deg);
    auto speed_at = [&](double height) {
        return log_profile_speed(height, condition.speed_ms, config.roughness_length, config.reference_height);
    };

    // Terrain-following first guess: the log profile evaluated at height above the local ground.
    for (std::int64_t k = 0; k < g.z; ++k) {
        const double zc = (static_cast<double>(k) + 0.5) * dz;
        for (std::int64_t j = 0; j < g.y; ++j) {
            for (std::int64_t i = 0; i <= g.x; ++i) {
                const bool sl = i > 0 && f.is_solid(k, j, i - 1);
                const bool sr = i < g.x && f.is_solid(k, j, i);
                if (sl || sr) continue;
                const double hl = i > 0 ? terrain.height(j, i - 1) : terrain.height(j, i);
                const double hr = i < g.x ? terrain.height(j, i) : terrain.height(j, i - 1);
                f.u_at(k, j, i) = dir[0] * speed_at(zc - std::max(hl, hr));
            }
        }
        for (std::int64_t j = 0; j <= g.y; ++j) {
            for (std::int64_t i = 0; i < g.x; ++i) {
                const bool sl = j > 0 && f.is_solid(k, j - 1, i);
                const bool sr = j < g.y && f.is_solid(k, j, i);
                if (sl || sr) continue;
                const double hl = j > 0 ? terrain.height(j - 1, i) : terrain.height(j, i);
                const double hr = j < g.y ? terrain.height(j, i) : terrain.height(j - 1, i);
                f.v_at(k, j, i) = dir[1] * speed_at(zc - std::max(hl, hr));
            }
        }
    }

    // Projection: find phi with A phi = -div(u0), A = -Laplacian over fluid cells,
    // zero-flux at solid faces and phi = 0 outside the open lateral/top boundaries.
    std::vector<std::int64_t> index(static_cast<std::size_t>(g.cells()), -1);
    std::int64_t n_fluid = 0;
    for (std::size_t c = 0; c < index.size(); ++c)
        if (!f.solid[c]) index[c] = n_fluid++;

    const double cx = 1.0 / (dx * dx), cy = 1.0 / (dy * dy), cz = 1.0 / (dz * dz);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n_fluid) * 7);
    Eigen::VectorXd rhs(n_fluid);
    double div_before = 0.0;
    auto cell_id = [&](std::int64_t k, std::int64_t j, std::int64_t i) {
        return static_cast<std::size_t>((k * g.y + j) * g.x + i);
    };
    for (std::int64_t k = 0; k < g.z; ++k) {
        for (std::int64_t j = 0; j < g.y; ++j) {
            for (std::int64_t i = 0; i < g.x; ++i) {
                const std::int64_t row = index[cell_id(k, j, i)];
                if (row < 0) continue;
                double diag = 0.0;
                auto couple = [&](std::int64_t kk, std::int64_t jj, std::int64_t ii, double coef, bool open_boundary) {
                    if (open_boundary) {
                        diag += coef;
                        return;
                    }
                    const std::int64_t col = index[cell_id(kk, jj, ii)];
                    if (col < 0) return;  // solid neighbour: zero flux
                    diag += coef;
                    trip.emplace_back(row, col, -coef);
                };
                couple(k, j, i - 1, cx, i == 0);
                couple(k, j, i + 1, cx, i == g.x - 1);
                couple(k, j - 1, i, cy, j == 0);
                couple(k, j + 1, i, cy, j == g.y - 1);
                if (k > 0) couple(k - 1, j, i, cz, false);
                couple(k + 1, j, i, cz, k == g.z - 1);
                trip.emplace_back(row, row, diag);
                const double d = f.divergence(k, j, i);
                div_before = std::max(div_before, std::abs(d));
                rhs[row] = -d;
            }
        }
    }

    const double tol_abs = config.projection_tolerance * condition.speed_ms / config.min_cell();
    WindBuildReport rep;
    rep.max_divergence_before = div_before;
    if (n_fluid > 0 && div_before > 0.0) {
        Eigen::SparseMatrix<double> A(n_fluid, n_fluid);
        A.setFromTriplets(trip.begin(), trip.end());
        trip.clear();
        trip.shrink_to_fit();
        Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
        cg.compute(A);
        cg.setMaxIterations(20000);
        Eigen::VectorXd phi = Eigen::VectorXd::Zero(n_fluid);
        double residual_max = div_before;
        // Tighten the relative L2 target until the max-norm of the residual
        // (which equals the remaining divergence) meets the absolute bound.
        double rel = std::min(1e-4, 0.1 * tol_abs / div_before);
        for (int attempt = 0; attempt < 6 && residual_max > 0.5 * tol_abs; ++attempt) {
            cg.setTolerance(rel);
            phi = cg.solveWithGuess(rhs, phi);
            rep.solver_iterations += cg.iterations();
            residual_max = (rhs - A * phi).cwiseAbs().maxCoeff();
            rel *= 1e-2;
        }

        auto phi_at = [&](std::int64_t k, std::int64_t j, std::int64_t i) -> double {
            const std::int64_t r = index[cell_id(k, j, i)];
            return r < 0 ? 0.0 : phi[r];
        };
        for (std::int64_t k = 0; k < g.z; ++k) {
            for (std::int64_t j = 0; j < g.y; ++j) {
                for (std::int64_t i = 0; i <= g.x; ++i) {
                    const bool sl = i > 0 && f.is_solid(k, j, i - 1);
                    const bool sr = i < g.x && f.is_solid(k, j, i);
                    if (sl || sr) continue;
                    const double pl = i > 0 ? phi_at(k, j, i - 1) : 0.0;
                    const double pr = i < g.x ? phi_at(k, j, i) : 0.0;
                    f.u_at(k, j, i) -= (pr - pl) / dx;
                }
            }
            for (std::int64_t j = 0; j <= g.y; ++j) {
                for (std::int64_t i = 0; i < g.x; ++i) {
                    const bool sl = j > 0 && f.is_solid(k, j - 1, i);
                    const bool sr = j < g.y && f.is_solid(k, j, i);
                    if (sl || sr) continue;
                    const double pl = j > 0 ? phi_at(k, j - 1, i) : 0.0;
                    const double pr = j < g.y ? phi_at(k, j, i) : 0.0;
                    f.v_at(k, j, i) -= (pr - pl) / dy;
                }
            }
        }
        for (std::int64_t k = 1; k <= g.z; ++k) {
            for (std::int64_t j = 0; j < g.y; ++j) {
                for (std::int64_t i = 0; i < g.x; ++i) {
                    const bool sl = f.is_solid(k - 1, j, i);
                    const bool sr = k < g.z && f.is_solid(k, j, i);
                    if (sl || sr) continue;
                    const double pl = phi_at(k - 1, j, i);
                    const double pr = k < g.z ? phi_at(k, j, i) : 0.0;
                    f.w_at(k, j, i) -= (pr - pl) / dz;
                }
            }
        }
    }
    rep.max_divergence_after = f.max_divergence();
    if (report) *report = rep;
    if (rep.max_divergence_after >= tol_abs) {
        throw NumericalFailure("wind projection did not converge: max divergence " +
                               std::to_string(rep.max_divergence_after) + " 1/s exceeds tolerance " +
                               std::to_string(tol_abs) + " 1/s after " + std::to_string(rep.solver_iterations) +
                               " iterations");
    }
    return f;
}

}  // namespace plumesr::plume
