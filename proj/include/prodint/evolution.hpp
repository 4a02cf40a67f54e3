#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "prodint/control.hpp"
#include "prodint/group.hpp"

// Left evolutions eta' = eta * gamma with eta(0) = e, their inverses
// (logarithmic derivatives), and the group law the evolution map transports
// onto control space.
//
// Step controls are evolved exactly as ordered products of exponentials.
// Sampled controls go through a Picard fixed-point solver for
//   kappa(t) = I + int_0^t kappa(s) gamma(s) ds
// on a refined grid that contains every cell boundary of the control, so the
// piecewise-constant representative is integrated without smearing; the
// remaining error is the trapezoid O(h^2) in the unknown. Controls whose L^1
// operator-norm mass exceeds the contraction bound are split by cumulative
// mass and the piece evolutions are left-composed.

namespace prodint {

inline std::vector<double> uniform_times(int n) {
    std::vector<double> t(static_cast<size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) t[static_cast<size_t>(i)] = static_cast<double>(i) / n;
    t.back() = 1.0;
    return t;
}

inline std::vector<double> merge_times(std::vector<double> a,
                                       const std::vector<double>& b) {
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end(),
                        [](double x, double y) { return std::abs(x - y) < 1e-13; }),
            a.end());
    return a;
}

/// Group-valued curve on a time grid; points[0] = I for evolutions.
struct Path {
    DescriptorPtr desc;
    std::vector<double> times;
    std::vector<Matrix> points;

    size_t index_of(double t) const {
        auto it = std::lower_bound(times.begin(), times.end(), t - 1e-12);
        if (it == times.end() || std::abs(*it - t) > 1e-10) {
            throw InvalidInputError("path: requested time is not a grid node");
        }
        return static_cast<size_t>(it - times.begin());
    }

    const Matrix& at_time(double t) const { return points[index_of(t)]; }

    GroupElement point(size_t i) const { return GroupElement(desc, points[i]); }

    double max_group_defect() const {
        double m = 0.0;
        for (const auto& p : points) m = std::max(m, desc->membership_defect(p));
        return m;
    }
};

/// Pointwise inverse of a path.
inline Path pointwise_inverse(const Path& p) {
    Path out{p.desc, p.times, {}};
    out.points.reserve(p.points.size());
    for (const auto& g : p.points) {
        out.points.push_back(g.partialPivLu().inverse());
    }
    return out;
}

// --- exact evolution of step controls ---------------------------------------

/// eta(t) for a step control, by the closed product formula.
inline Matrix step_evolution_at(const StepControl& c, double t) {
    const int d = c.desc->matrix_dim();
    Matrix g = Matrix::Identity(d, d);
    for (size_t j = 0; j + 1 < c.breakpoints.size(); ++j) {
        const double lo = c.breakpoints[j];
        const double hi = c.breakpoints[j + 1];
        if (t <= lo) break;
        const double w = std::min(t, hi) - lo;
        g = g * dense_exp(w * c.values[j].mat);
        if (t <= hi) break;
    }
    return g;
}

/// Exact left evolution of a step control on the given output nodes.
inline Path evolve_step_path(const StepControl& c, const std::vector<double>& out) {
    const int d = c.desc->matrix_dim();
    Path path{c.desc, out, {}};
    path.points.reserve(out.size());
    // Anchors at breakpoints, then one exponential per output node.
    std::vector<Matrix> anchors;
    anchors.push_back(Matrix::Identity(d, d));
    for (size_t j = 0; j + 1 < c.breakpoints.size(); ++j) {
        const double w = c.breakpoints[j + 1] - c.breakpoints[j];
        anchors.push_back(anchors.back() * dense_exp(w * c.values[j].mat));
    }
    for (double t : out) {
        auto it = std::upper_bound(c.breakpoints.begin(), c.breakpoints.end(), t);
        size_t j = static_cast<size_t>(it - c.breakpoints.begin());
        if (j == 0) j = 1;
        if (j + 1 > c.breakpoints.size()) j = c.breakpoints.size() - 1;
        const double lo = c.breakpoints[j - 1];
        if (std::abs(t - lo) < 1e-15) {
            path.points.push_back(anchors[j - 1]);
        } else {
            path.points.push_back(anchors[j - 1] *
                                  dense_exp((t - lo) * c.values[j - 1].mat));
        }
    }
    return path;
}

inline Path evolve_step(const StepControl& c, int grid = 1024) {
    return evolve_step_path(c, merge_times(uniform_times(grid), c.breakpoints));
}

// --- Picard solver ------------------------------------------------------------

struct EvolveOptions {
    int grid = 1024;        // output grid
    double theta_max = 0.5; // per-piece L^1 operator-norm mass bound
    double picard_tol = 1e-12;
    int max_iterations = 200;
    int refine = 16;         // internal quadrature refinement factor
    double path_tol = 1e-8; // reported-defect budget (monitored, not enforced)
};

struct EvolutionStats {
    int picard_iterations = 0;
    double picard_residual = 0.0;
    std::vector<double> partition{0.0, 1.0};
    double defect_max = 0.0;
};

namespace detail {

inline std::vector<double> refine_nodes(const std::vector<double>& base, double h) {
    std::vector<double> out;
    out.reserve(base.size());
    for (size_t j = 0; j + 1 < base.size(); ++j) {
        const double lo = base[j];
        const double hi = base[j + 1];
        out.push_back(lo);
        const int parts = static_cast<int>(std::ceil((hi - lo) / h - 1e-12));
        for (int k = 1; k < parts; ++k) {
            out.push_back(lo + (hi - lo) * k / parts);
        }
    }
    out.push_back(base.back());
    return out;
}

/// Fixed point of kappa -> I + int kappa gamma on a grid containing the
/// control's cell boundaries; trapezoid in kappa, exact cell values in gamma.
inline Path picard_path(const Control& c, const std::vector<double>& out,
                        const EvolveOptions& opt, EvolutionStats* stats) {
    const int d = c.descriptor()->matrix_dim();
    const int cells = static_cast<int>(c.piece_boundaries().size()) - 1;
    const int base_n = std::max({cells, static_cast<int>(out.size()) - 1, 16});
    const double h_target = 1.0 / (static_cast<double>(opt.refine) * base_n);
    std::vector<double> nodes =
        refine_nodes(merge_times(c.piece_boundaries(), out), h_target);
    const size_t m = nodes.size();

    std::vector<Matrix> vals; // gamma at interval midpoints
    vals.reserve(m - 1);
    for (size_t j = 0; j + 1 < m; ++j) {
        vals.push_back(c.value_at(0.5 * (nodes[j] + nodes[j + 1])));
    }

    std::vector<Matrix> kappa(m, Matrix::Identity(d, d));
    std::vector<Matrix> next(m, Matrix::Identity(d, d));
    int iterations = 0;
    double residual = 0.0;
    for (iterations = 1; iterations <= opt.max_iterations; ++iterations) {
        Matrix acc = Matrix::Zero(d, d);
        next[0] = Matrix::Identity(d, d);
        for (size_t j = 0; j + 1 < m; ++j) {
            const double w = nodes[j + 1] - nodes[j];
            acc += (0.5 * w) * ((kappa[j] + kappa[j + 1]) * vals[j]);
            next[j + 1] = Matrix::Identity(d, d) + acc;
        }
        residual = 0.0;
        for (size_t j = 0; j < m; ++j) {
            residual = std::max(residual, max_norm(next[j] - kappa[j]));
        }
        kappa.swap(next);
        if (residual <= opt.picard_tol) break;
    }
    if (residual > opt.picard_tol) {
        throw NoConvergenceError("evolve_picard: iteration cap reached, residual " +
                                 std::to_string(residual));
    }
    if (stats) {
        stats->picard_iterations = std::max(stats->picard_iterations, iterations);
        stats->picard_residual = std::max(stats->picard_residual, residual);
    }

    Path path{c.descriptor(), out, {}};
    path.points.reserve(out.size());
    size_t cursor = 0;
    for (double t : out) {
        while (cursor + 1 < m && nodes[cursor] < t - 1e-12) ++cursor;
        path.points.push_back(kappa[cursor]);
    }
    path.points.front() = Matrix::Identity(d, d);
    return path;
}

} // namespace detail

/// Picard evolution; requires L^1 operator mass <= theta_max.
inline Path evolve_picard(const Control& c, const EvolveOptions& opt = {},
                          EvolutionStats* stats = nullptr) {
    const double mass = lp_seminorm(c, Lp::One, MatrixNorm::Operator);
    if (mass > opt.theta_max + 1e-12) {
        throw ContractionBoundError(
            "evolve_picard: L^1 mass " + std::to_string(mass) +
            " exceeds contraction bound " + std::to_string(opt.theta_max));
    }
    std::vector<double> out = uniform_times(opt.grid);
    if (c.is_step()) out = merge_times(out, c.step().breakpoints);
    Path p = detail::picard_path(c, out, opt, stats);
    if (stats) stats->defect_max = p.max_group_defect();
    return p;
}

// --- adaptive partition and global evolution ---------------------------------

/// Split points so each piece's L^1 operator mass is <= theta; snaps to the
/// control's cell boundaries except for single cells heavier than theta.
inline std::vector<double> mass_partition(const Control& c, double theta) {
    const auto bp = c.piece_boundaries();
    std::vector<double> splits{0.0};
    double acc = 0.0;
    for (size_t j = 0; j + 1 < bp.size(); ++j) {
        const double w = bp[j + 1] - bp[j];
        const double rate = op_norm(c.value_at(0.5 * (bp[j] + bp[j + 1])));
        double mu = w * rate;
        double start = bp[j];
        if (acc + mu > theta + 1e-12 && acc > 0.0) {
            splits.push_back(bp[j]);
            acc = 0.0;
        }
        while (mu > theta + 1e-12) {
            const double dt = theta / rate;
            start += dt;
            splits.push_back(start);
            mu -= theta;
        }
        acc += mu;
    }
    splits.push_back(1.0);
    splits.erase(std::unique(splits.begin(), splits.end(),
                             [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                 splits.end());
    return splits;
}

/// The control u -> (b-a) gamma(a + u (b-a)), represented exactly.
inline Control restrict_scaled(const Control& c, double a, double b) {
    const double width = b - a;
    if (c.is_step()) {
        return scale_control(pullback_affine(c, a, b), width);
    }
    const auto& sc = c.sampled();
    const double cell = 1.0 / sc.n;
    const double fa = a / cell;
    const double fb = b / cell;
    const bool aligned = std::abs(fa - std::round(fa)) < 1e-9 &&
                         std::abs(fb - std::round(fb)) < 1e-9;
    if (aligned) {
        const int i0 = static_cast<int>(std::round(fa));
        const int i1 = static_cast<int>(std::round(fb));
        std::vector<AlgebraElement> s;
        s.reserve(static_cast<size_t>(i1 - i0));
        for (int i = i0; i < i1; ++i) {
            s.emplace_back(sc.desc, Matrix(width * sc.samples[static_cast<size_t>(i)].mat));
        }
        return SampledControl(sc.desc, std::move(s), sc.p_class);
    }
    // Window not on cell boundaries: exact as a step control.
    std::vector<double> local{0.0};
    for (int i = 1; i < sc.n; ++i) {
        const double t = i * cell;
        if (t > a + 1e-14 && t < b - 1e-14) local.push_back((t - a) / width);
    }
    local.push_back(1.0);
    std::vector<AlgebraElement> vals;
    for (size_t j = 0; j + 1 < local.size(); ++j) {
        const double mid = a + 0.5 * (local[j] + local[j + 1]) * width;
        vals.emplace_back(sc.desc, Matrix(width * sc.value_at(mid)));
    }
    return StepControl(sc.desc, std::move(local), std::move(vals));
}

/// Global left evolution: adaptive mass partition, piecewise evolution
/// (exact products for step controls, Picard for sampled), left-composed.
inline Path evolve_with_times(const Control& c, const std::vector<double>& extra,
                              const EvolveOptions& opt = {},
                              EvolutionStats* stats = nullptr) {
    const int d = c.descriptor()->matrix_dim();
    std::vector<double> splits = mass_partition(c, opt.theta_max);
    std::vector<double> out = merge_times(uniform_times(opt.grid), splits);
    if (c.is_step()) out = merge_times(out, c.step().breakpoints);
    out = merge_times(out, extra);
    if (stats) stats->partition = splits;

    Path path{c.descriptor(), out, {}};
    path.points.reserve(out.size());
    Matrix anchor = Matrix::Identity(d, d);
    size_t cursor = 0;
    for (size_t k = 0; k + 1 < splits.size(); ++k) {
        const double a = splits[k];
        const double b = splits[k + 1];
        std::vector<double> local{0.0};
        while (cursor < out.size() && out[cursor] <= b + 1e-13) {
            const double u = (out[cursor] - a) / (b - a);
            if (u > 1e-13 && u < 1.0 - 1e-13) local.push_back(u);
            ++cursor;
        }
        local.push_back(1.0);
        Control piece = restrict_scaled(c, a, b);
        Path pp = c.is_step() ? evolve_step_path(piece.step(), local)
                              : detail::picard_path(piece, local, opt, stats);
        const size_t skip = (k == 0) ? 0 : 1; // piece start equals previous end
        for (size_t i = skip; i < pp.points.size(); ++i) {
            path.points.push_back(anchor * pp.points[i]);
        }
        anchor = path.points.back();
    }
    if (path.points.size() != out.size()) {
        throw Error("evolve: internal grid bookkeeping failed");
    }
    if (stats) stats->defect_max = path.max_group_defect();
    return path;
}

inline Path evolve(const Control& c, const EvolveOptions& opt = {},
                   EvolutionStats* stats = nullptr) {
    return evolve_with_times(c, {}, opt, stats);
}

/// Right evolution: delta^r(eta) = gamma, via eta = (Evol(-gamma))^{-1}.
inline Path evolve_right(const Control& c, const EvolveOptions& opt = {},
                         EvolutionStats* stats = nullptr) {
    return pointwise_inverse(evolve(scale_control(c, -1.0), opt, stats));
}

// --- logarithmic derivatives ---------------------------------------------------

namespace detail {

inline Control log_derivative(const Path& p, bool left) {
    if (p.times.size() < 2) {
        throw InvalidInputError("log_derivative: path needs at least two nodes");
    }
    const size_t m = p.times.size() - 1;
    std::vector<AlgebraElement> vals;
    vals.reserve(m);
    for (size_t i = 0; i < m; ++i) {
        const double h = p.times[i + 1] - p.times[i];
        Matrix ratio;
        if (left) {
            ratio = p.points[i].partialPivLu().solve(p.points[i + 1]);
        } else {
            ratio = p.points[i]
                        .transpose()
                        .partialPivLu()
                        .solve(p.points[i + 1].transpose())
                        .transpose();
        }
        try {
            vals.emplace_back(p.desc, Matrix(dense_log(ratio) / h));
        } catch (const OutOfDomainError&) {
            throw PathTooCoarseError(
                "log_derivative: consecutive points too far apart at t = " +
                std::to_string(p.times[i]));
        }
        // project onto the algebra
        vals.back() = algebra_from_coordinates(p.desc, vals.back().coordinates());
    }
    bool uniform = true;
    const double h0 = p.times[1] - p.times[0];
    for (size_t i = 0; i + 1 < p.times.size(); ++i) {
        if (std::abs(p.times[i + 1] - p.times[i] - h0) > 1e-12) {
            uniform = false;
            break;
        }
    }
    if (uniform) {
        return SampledControl(p.desc, std::move(vals));
    }
    return StepControl(p.desc, p.times, std::move(vals));
}

} // namespace detail

/// delta^l(eta): per-interval value log(eta_i^{-1} eta_{i+1}) / h.
inline Control left_log_derivative(const Path& p) {
    return detail::log_derivative(p, true);
}

/// delta^r(eta): per-interval value log(eta_{i+1} eta_i^{-1}) / h.
inline Control right_log_derivative(const Path& p) {
    return detail::log_derivative(p, false);
}

// --- the group law on controls ---------------------------------------------------

/// gamma1 (.) gamma2: t -> Ad(Evol(gamma2)(t))^{-1}(gamma1(t)) + gamma2(t),
/// sampled on the cell midpoints of the output grid.
inline Control odot(const Control& g1, const Control& g2,
                    const EvolveOptions& opt = {}) {
    if (!same_group(g1.descriptor(), g2.descriptor())) {
        throw IncompatibleElementsError("odot: descriptor mismatch");
    }
    const auto& desc = g1.descriptor();
    const int n = opt.grid;
    std::vector<double> mids(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) mids[static_cast<size_t>(i)] = (i + 0.5) / n;
    Path eta2 = evolve_with_times(g2, mids, opt);
    std::vector<AlgebraElement> samples;
    samples.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double t = (i + 0.5) / n;
        const Matrix& g = eta2.at_time(t);
        const Matrix ad_inv = g.partialPivLu().solve(g1.value_at(t) * g);
        const Matrix raw = ad_inv + g2.value_at(t);
        samples.push_back(algebra_from_coordinates(desc, desc->coordinates(raw)));
    }
    return SampledControl(desc, std::move(samples));
}

/// The (.)-inverse: t -> -Ad(Evol(gamma)(t))(gamma(t)).
inline Control odot_inverse(const Control& c, const EvolveOptions& opt = {}) {
    const auto& desc = c.descriptor();
    const int n = opt.grid;
    std::vector<double> mids(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) mids[static_cast<size_t>(i)] = (i + 0.5) / n;
    Path eta = evolve_with_times(c, mids, opt);
    std::vector<AlgebraElement> samples;
    samples.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double t = (i + 0.5) / n;
        const Matrix& g = eta.at_time(t);
        const Matrix raw = -(g * c.value_at(t) * g.partialPivLu().inverse());
        samples.push_back(algebra_from_coordinates(desc, desc->coordinates(raw)));
    }
    return SampledControl(desc, std::move(samples));
}

/// T_0 Evol(gamma)(t) = int_0^t gamma(s) ds, exact for the representative.
inline AlgebraElement evol_tangent_at_zero(const Control& c, double t) {
    if (t < 0.0 || t > 1.0 + 1e-12) {
        throw InvalidInputError("evol_tangent_at_zero: t outside [0,1]");
    }
    const auto bp = c.piece_boundaries();
    const int d = c.descriptor()->matrix_dim();
    Matrix acc = Matrix::Zero(d, d);
    for (size_t j = 0; j + 1 < bp.size(); ++j) {
        if (bp[j] >= t) break;
        const double hi = std::min(bp[j + 1], t);
        acc += (hi - bp[j]) * c.value_at(0.5 * (bp[j] + hi));
    }
    return AlgebraElement(c.descriptor(), acc);
}

} // namespace prodint
