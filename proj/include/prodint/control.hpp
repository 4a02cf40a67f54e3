#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <variant>
#include <vector>

#include "prodint/group.hpp"

// Controls: algebra-valued measurable maps on [0,1], stored either as step
// functions (breakpoints + piece values, right-open pieces) or as uniform
// midpoint-sample grids. A sampled control stands for the piecewise-constant
// representative that takes sample i on the cell [i/N, (i+1)/N).

namespace prodint {

enum class Lp { One, Two, Inf };
enum class MatrixNorm { Operator, Frobenius, Max };
enum class PClass { L1, L2, LInf, Regulated };

inline double matrix_norm(const Matrix& m, MatrixNorm q) {
    switch (q) {
    case MatrixNorm::Operator: return op_norm(m);
    case MatrixNorm::Frobenius: return fro_norm(m);
    case MatrixNorm::Max: return max_norm(m);
    }
    return 0.0;
}

/// Piecewise-constant control: value j on [breakpoints[j], breakpoints[j+1]).
struct StepControl {
    DescriptorPtr desc;
    std::vector<double> breakpoints; // strictly increasing, 0 ... 1
    std::vector<AlgebraElement> values;

    StepControl(DescriptorPtr d, std::vector<double> bp,
                std::vector<AlgebraElement> vals)
        : desc(std::move(d)), breakpoints(std::move(bp)), values(std::move(vals)) {
        if (breakpoints.size() < 2 || breakpoints.front() != 0.0 ||
            breakpoints.back() != 1.0) {
            throw InvalidInputError("step control: breakpoints must run 0..1");
        }
        for (size_t j = 1; j < breakpoints.size(); ++j) {
            if (!(breakpoints[j] > breakpoints[j - 1])) {
                throw InvalidInputError("step control: breakpoints not increasing");
            }
        }
        if (values.size() + 1 != breakpoints.size()) {
            throw InvalidInputError("step control: piece count mismatch");
        }
        for (const auto& v : values) {
            if (!same_group(v.desc, desc)) {
                throw IncompatibleElementsError("step control: mixed descriptors");
            }
        }
    }

    const Matrix& value_at(double t) const {
        auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
        size_t j = static_cast<size_t>(it - breakpoints.begin());
        if (j == 0) j = 1;
        if (j > values.size()) j = values.size();
        return values[j - 1].mat;
    }
};

/// Uniform grid of N midpoint samples; sample i is the value on [i/N,(i+1)/N).
struct SampledControl {
    DescriptorPtr desc;
    int n = 0;
    std::vector<AlgebraElement> samples;
    PClass p_class = PClass::L1;

    SampledControl(DescriptorPtr d, std::vector<AlgebraElement> s,
                   PClass pc = PClass::L1)
        : desc(std::move(d)), n(static_cast<int>(s.size())),
          samples(std::move(s)), p_class(pc) {
        if (n < 1) {
            throw InvalidInputError("sampled control: need at least one sample");
        }
        for (const auto& v : samples) {
            if (!same_group(v.desc, desc)) {
                throw IncompatibleElementsError("sampled control: mixed descriptors");
            }
        }
    }

    const Matrix& value_at(double t) const {
        int i = static_cast<int>(std::floor(t * n));
        i = std::clamp(i, 0, n - 1);
        return samples[static_cast<size_t>(i)].mat;
    }
};

class Control {
public:
    Control(StepControl s) : v_(std::move(s)) {}
    Control(SampledControl s) : v_(std::move(s)) {}

    bool is_step() const { return std::holds_alternative<StepControl>(v_); }
    const StepControl& step() const { return std::get<StepControl>(v_); }
    const SampledControl& sampled() const { return std::get<SampledControl>(v_); }

    const DescriptorPtr& descriptor() const {
        return is_step() ? step().desc : sampled().desc;
    }

    const Matrix& value_at(double t) const {
        return is_step() ? step().value_at(t) : sampled().value_at(t);
    }

    /// Interval boundaries of the piecewise-constant representative.
    std::vector<double> piece_boundaries() const {
        if (is_step()) return step().breakpoints;
        std::vector<double> b(static_cast<size_t>(sampled().n) + 1);
        for (size_t i = 0; i < b.size(); ++i) {
            b[i] = static_cast<double>(i) / sampled().n;
        }
        return b;
    }

private:
    std::variant<StepControl, SampledControl> v_;
};

inline Control zero_step_control(const DescriptorPtr& desc) {
    return StepControl(desc, {0.0, 1.0}, {algebra_zero(desc)});
}

inline Control constant_control(const AlgebraElement& v) {
    return StepControl(v.desc, {0.0, 1.0}, {v});
}

/// Sample fn at the N cell midpoints.
inline Control sampled_from(const DescriptorPtr& desc, int n,
                            const std::function<Matrix(double)>& fn,
                            PClass pc = PClass::L1) {
    std::vector<AlgebraElement> s;
    s.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        s.emplace_back(desc, fn((i + 0.5) / n));
    }
    return SampledControl(desc, std::move(s), pc);
}

// --- seminorms ----------------------------------------------------------------

/// ||gamma||_{L^p,q}: exact piecewise integral for steps, midpoint quadrature
/// for samples; p = Inf is the max over pieces/samples.
inline double lp_seminorm(const Control& c, Lp p, MatrixNorm q) {
    std::vector<double> widths;
    std::vector<double> norms;
    if (c.is_step()) {
        const auto& sc = c.step();
        for (size_t j = 0; j + 1 < sc.breakpoints.size(); ++j) {
            widths.push_back(sc.breakpoints[j + 1] - sc.breakpoints[j]);
            norms.push_back(matrix_norm(sc.values[j].mat, q));
        }
    } else {
        const auto& sc = c.sampled();
        widths.assign(static_cast<size_t>(sc.n), 1.0 / sc.n);
        for (const auto& s : sc.samples) norms.push_back(matrix_norm(s.mat, q));
    }
    switch (p) {
    case Lp::One: {
        double acc = 0.0;
        for (size_t j = 0; j < norms.size(); ++j) acc += widths[j] * norms[j];
        return acc;
    }
    case Lp::Two: {
        double acc = 0.0;
        for (size_t j = 0; j < norms.size(); ++j) acc += widths[j] * norms[j] * norms[j];
        return std::sqrt(acc);
    }
    case Lp::Inf:
        return *std::max_element(norms.begin(), norms.end());
    }
    return 0.0;
}

// --- pointwise arithmetic -------------------------------------------------------

namespace detail {

inline std::vector<double> merge_boundaries(const std::vector<double>& a,
                                            const std::vector<double>& b) {
    std::vector<double> out;
    out.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    out.erase(std::unique(out.begin(), out.end(),
                          [](double x, double y) { return std::abs(x - y) < 1e-15; }),
              out.end());
    return out;
}

} // namespace detail

inline Control scale_control(const Control& c, double a) {
    if (c.is_step()) {
        auto sc = c.step();
        for (auto& v : sc.values) v.mat *= a;
        return sc;
    }
    auto sc = c.sampled();
    for (auto& v : sc.samples) v.mat *= a;
    return sc;
}

/// Pointwise sum of the representatives, on the merged piece structure.
inline Control add_controls(const Control& a, const Control& b) {
    if (!same_group(a.descriptor(), b.descriptor())) {
        throw IncompatibleElementsError("add_controls: descriptor mismatch");
    }
    if (a.is_step() && b.is_step()) {
        auto bp = detail::merge_boundaries(a.piece_boundaries(), b.piece_boundaries());
        std::vector<AlgebraElement> vals;
        for (size_t j = 0; j + 1 < bp.size(); ++j) {
            const double mid = 0.5 * (bp[j] + bp[j + 1]);
            vals.emplace_back(a.descriptor(), a.value_at(mid) + b.value_at(mid));
        }
        return StepControl(a.descriptor(), std::move(bp), std::move(vals));
    }
    const int n = std::max(a.is_step() ? 1 : a.sampled().n,
                           b.is_step() ? 1 : b.sampled().n);
    return sampled_from(a.descriptor(), n, [&](double t) {
        return Matrix(a.value_at(t) + b.value_at(t));
    });
}

/// Exact L^1 distance of the two representatives (merged-interval evaluation).
inline double control_l1_distance(const Control& a, const Control& b,
                                  MatrixNorm q = MatrixNorm::Operator) {
    auto bp = detail::merge_boundaries(a.piece_boundaries(), b.piece_boundaries());
    double acc = 0.0;
    for (size_t j = 0; j + 1 < bp.size(); ++j) {
        const double mid = 0.5 * (bp[j] + bp[j + 1]);
        acc += (bp[j + 1] - bp[j]) * matrix_norm(a.value_at(mid) - b.value_at(mid), q);
    }
    return acc;
}

inline double control_sup_distance(const Control& a, const Control& b,
                                   MatrixNorm q = MatrixNorm::Operator) {
    auto bp = detail::merge_boundaries(a.piece_boundaries(), b.piece_boundaries());
    double m = 0.0;
    for (size_t j = 0; j + 1 < bp.size(); ++j) {
        const double mid = 0.5 * (bp[j] + bp[j + 1]);
        m = std::max(m, matrix_norm(a.value_at(mid) - b.value_at(mid), q));
    }
    return m;
}

// --- structural operators -------------------------------------------------------

/// Apply a linear map on basis coordinates value-wise (axiom B1 shape).
/// lambda is (target algebra_dim) x (source algebra_dim); kind is preserved.
inline Control pushforward_linear(const Control& c, const Matrix& lambda,
                                  const DescriptorPtr& target) {
    const auto& src = c.descriptor();
    if (lambda.cols() != src->algebra_dim() ||
        lambda.rows() != target->algebra_dim()) {
        throw InvalidInputError("pushforward_linear: coordinate map shape mismatch");
    }
    auto map_value = [&](const AlgebraElement& v) {
        return algebra_from_coordinates(target, lambda * v.coordinates());
    };
    if (c.is_step()) {
        const auto& sc = c.step();
        std::vector<AlgebraElement> vals;
        vals.reserve(sc.values.size());
        for (const auto& v : sc.values) vals.push_back(map_value(v));
        return StepControl(target, sc.breakpoints, std::move(vals));
    }
    const auto& sc = c.sampled();
    std::vector<AlgebraElement> vals;
    vals.reserve(sc.samples.size());
    for (const auto& v : sc.samples) vals.push_back(map_value(v));
    return SampledControl(target, std::move(vals), sc.p_class);
}

inline Control pushforward_linear(const Control& c, const Matrix& lambda) {
    return pushforward_linear(c, lambda, c.descriptor());
}

/// Reparametrize gamma onto [0,1] through f(t) = alpha + t (beta - alpha)
/// (axiom B2 with a window [alpha, beta] of [0,1]).
inline Control pullback_affine(const Control& c, double alpha, double beta) {
    if (!(0.0 <= alpha && alpha < beta && beta <= 1.0)) {
        throw InvalidInputError("pullback_affine: need 0 <= alpha < beta <= 1");
    }
    const double width = beta - alpha;
    if (c.is_step()) {
        const auto& sc = c.step();
        std::vector<double> bp{0.0};
        for (double b : sc.breakpoints) {
            if (b > alpha + 1e-15 && b < beta - 1e-15) {
                bp.push_back((b - alpha) / width);
            }
        }
        bp.push_back(1.0);
        std::vector<AlgebraElement> vals;
        for (size_t j = 0; j + 1 < bp.size(); ++j) {
            const double mid = alpha + 0.5 * (bp[j] + bp[j + 1]) * width;
            vals.emplace_back(sc.desc, sc.value_at(mid));
        }
        return StepControl(sc.desc, std::move(bp), std::move(vals));
    }
    const auto& sc = c.sampled();
    return sampled_from(sc.desc, sc.n, [&](double t) {
        return Matrix(sc.value_at(alpha + t * width));
    }, sc.p_class);
}

/// Glue pieces (each on [0,1]) into the windows of a partition of [0,1].
inline Control concat(const std::vector<Control>& pieces,
                      const std::vector<double>& partition) {
    if (pieces.empty() || pieces.size() + 1 != partition.size()) {
        throw InvalidInputError("concat: pieces/partition size mismatch");
    }
    if (partition.front() != 0.0 || partition.back() != 1.0) {
        throw InvalidInputError("concat: partition must run 0..1");
    }
    for (size_t k = 1; k < partition.size(); ++k) {
        if (!(partition[k] > partition[k - 1])) {
            throw InvalidInputError("concat: partition not increasing");
        }
    }
    const auto& desc = pieces.front().descriptor();
    bool all_step = true;
    int max_density = 1;
    for (size_t k = 0; k < pieces.size(); ++k) {
        if (!same_group(pieces[k].descriptor(), desc)) {
            throw IncompatibleElementsError("concat: mixed descriptors");
        }
        if (!pieces[k].is_step()) {
            all_step = false;
            const double w = partition[k + 1] - partition[k];
            max_density = std::max(
                max_density,
                static_cast<int>(std::ceil(pieces[k].sampled().n / w)));
        }
    }
    auto locate = [&](double t) {
        auto it = std::upper_bound(partition.begin(), partition.end(), t);
        size_t k = static_cast<size_t>(it - partition.begin());
        if (k == 0) k = 1;
        if (k > pieces.size()) k = pieces.size();
        return k - 1;
    };
    auto eval = [&](double t) {
        const size_t k = locate(t);
        const double local = (t - partition[k]) / (partition[k + 1] - partition[k]);
        return pieces[k].value_at(local);
    };
    if (all_step) {
        std::vector<double> bp{0.0};
        for (size_t k = 0; k < pieces.size(); ++k) {
            const double w = partition[k + 1] - partition[k];
            for (double b : pieces[k].step().breakpoints) {
                const double g = partition[k] + b * w;
                if (g > bp.back() + 1e-15 && g < 1.0 - 1e-15) bp.push_back(g);
            }
        }
        bp.push_back(1.0);
        std::vector<AlgebraElement> vals;
        for (size_t j = 0; j + 1 < bp.size(); ++j) {
            vals.emplace_back(desc, eval(0.5 * (bp[j] + bp[j + 1])));
        }
        return StepControl(desc, std::move(bp), std::move(vals));
    }
    return sampled_from(desc, max_density,
                        [&](double t) { return Matrix(eval(t)); });
}

/// The n pieces gamma_{n,k}(t) = (1/n) gamma((k+t)/n); exact on step controls.
inline std::vector<Control> subdivide(const Control& c, int n) {
    if (n < 1) {
        throw InvalidInputError("subdivide: n must be positive");
    }
    std::vector<Control> out;
    out.reserve(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double lo = static_cast<double>(k) / n;
        const double hi = static_cast<double>(k + 1) / n;
        if (c.is_step()) {
            Control piece = pullback_affine(c, lo, hi);
            out.push_back(scale_control(piece, 1.0 / n));
        } else {
            const int np = (c.sampled().n % n == 0) ? c.sampled().n / n
                                                    : (c.sampled().n + n - 1) / n;
            out.push_back(sampled_from(
                c.descriptor(), std::max(1, np),
                [&](double t) { return Matrix(c.value_at(lo + t * (hi - lo)) / n); },
                c.sampled().p_class));
        }
    }
    return out;
}

/// Piecewise-constant approximation on m equal pieces, each value one of the
/// stored samples (the one covering the piece midpoint), so values stay in
/// the sample image.
inline StepControl step_approximate(const SampledControl& c, int m) {
    if (m < 1) {
        throw InvalidInputError("step_approximate: m must be positive");
    }
    if (m > c.n) {
        throw InvalidInputError("step_approximate: m exceeds sample count");
    }
    std::vector<double> bp(static_cast<size_t>(m) + 1);
    for (int j = 0; j <= m; ++j) bp[static_cast<size_t>(j)] = static_cast<double>(j) / m;
    std::vector<AlgebraElement> vals;
    vals.reserve(static_cast<size_t>(m));
    for (int j = 0; j < m; ++j) {
        const double mid = (j + 0.5) / m;
        int idx = std::clamp(static_cast<int>(std::floor(mid * c.n)), 0, c.n - 1);
        vals.push_back(c.samples[static_cast<size_t>(idx)]);
    }
    return StepControl(c.desc, std::move(bp), std::move(vals));
}

} // namespace prodint
