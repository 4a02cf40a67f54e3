#pragma once

#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "prodint/evolution.hpp"

// Evolution through a split extension {1} -> N -> G -> Q -> {1}:
//   zeta  = sigma o Evol_Q(L(q) o gamma)
//   tau   = gamma - delta^l(zeta)          (takes values in the kernel algebra)
//   theta = Evol_N(Ad(zeta)(tau))
//   Evol_G(gamma) = theta * zeta
// The section sigma is a group homomorphism here (split extension), so
// delta^l(zeta) = L(sigma)(L(q)(gamma)) exactly; the grid-log route is kept
// in the tests as a cross-check.

namespace prodint {

/// Data of a split extension. Kernel elements are stored embedded in G, so
/// the kernel descriptor uses G-sized matrices with the subalgebra basis.
struct ExtensionDescriptor {
    DescriptorPtr total;    // G
    DescriptorPtr kernel;   // N, embedded
    DescriptorPtr quotient; // Q
    Matrix algebra_projection; // L(q):      dim q x dim g (on coordinates)
    Matrix algebra_section;    // L(sigma):  dim g x dim q
    std::function<Matrix(const Matrix&)> group_projection; // G -> Q
    std::function<Matrix(const Matrix&)> section;          // Q -> G
    std::function<Matrix(const Matrix&)> embed_kernel;     // N -> G

    /// q o sigma = id and q(embedded N) = e, probed on random elements.
    double validation_defect(unsigned seed = 12345) const {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        double worst = max_norm(
            Matrix(algebra_projection * algebra_section -
                   Matrix::Identity(quotient->algebra_dim(), quotient->algebra_dim())));
        for (int trial = 0; trial < 16; ++trial) {
            Vector cq(quotient->algebra_dim());
            for (int i = 0; i < cq.size(); ++i) cq[i] = u(rng);
            const Matrix q = dense_exp(quotient->from_coordinates(cq));
            worst = std::max(worst, max_norm(group_projection(section(q)) - q));

            Vector cn(kernel->algebra_dim());
            for (int i = 0; i < cn.size(); ++i) cn[i] = u(rng);
            const Matrix n = dense_exp(kernel->from_coordinates(cn));
            const int dq = quotient->matrix_dim();
            worst = std::max(worst, max_norm(group_projection(embed_kernel(n)) -
                                             Matrix::Identity(dq, dq)));
        }
        return worst;
    }
};

/// SE(2) = R^2 (semidirect) SO(2), everything written in 3x3 homogeneous form.
inline ExtensionDescriptor make_se2_extension() {
    ExtensionDescriptor ext;
    ext.total = GroupDescriptor::special_euclidean2();
    ext.quotient = GroupDescriptor::special_orthogonal(2);
    const auto& b = ext.total->basis(); // J, P1, P2
    ext.kernel = std::make_shared<GroupDescriptor>(
        GroupKind::SpecialEuclidean2, 3, std::vector<Matrix>{b[1], b[2]},
        "SE2-translations");
    ext.algebra_projection = Matrix::Zero(1, 3);
    ext.algebra_projection(0, 0) = 1.0;
    ext.algebra_section = Matrix::Zero(3, 1);
    ext.algebra_section(0, 0) = 1.0;
    ext.group_projection = [](const Matrix& g) { return Matrix(g.block(0, 0, 2, 2)); };
    ext.section = [](const Matrix& r) {
        Matrix g = Matrix::Identity(3, 3);
        g.block(0, 0, 2, 2) = r;
        return g;
    };
    ext.embed_kernel = [](const Matrix& n) { return n; };
    return ext;
}

struct ExtensionStats {
    double tau_kernel_defect = 0.0; // largest component of tau outside n
    EvolutionStats quotient;
    EvolutionStats kernel;
};

/// Evolve gamma through the extension; returns theta * zeta on the grid.
inline Path evolve_via_extension(const Control& gamma, const ExtensionDescriptor& ext,
                                 const EvolveOptions& opt = {},
                                 ExtensionStats* stats = nullptr,
                                 double tau_tolerance = 1e-8) {
    if (!same_group(gamma.descriptor(), ext.total)) {
        throw IncompatibleElementsError("evolve_via_extension: control not in G");
    }

    // zeta = sigma o Evol_Q(L(q) gamma); evaluated on the output grid and on
    // the midpoint grid used to sample the kernel control.
    Control gamma_q = pushforward_linear(gamma, ext.algebra_projection, ext.quotient);
    const int n_int = std::max(4 * opt.grid, 4096);
    std::vector<double> mids(static_cast<size_t>(n_int));
    for (int i = 0; i < n_int; ++i) mids[static_cast<size_t>(i)] = (i + 0.5) / n_int;
    EvolutionStats qstats;
    Path zeta_q = evolve_with_times(gamma_q, mids, opt, &qstats);
    if (stats) stats->quotient = qstats;

    // tau = gamma - delta^l(zeta) = gamma - L(sigma)(L(q)(gamma)).
    Control sigma_part = pushforward_linear(gamma_q, ext.algebra_section, ext.total);
    Control tau = add_controls(gamma, scale_control(sigma_part, -1.0));

    double tau_defect = 0.0;
    const auto tb = tau.piece_boundaries();
    for (size_t j = 0; j + 1 < tb.size(); ++j) {
        tau_defect = std::max(
            tau_defect, ext.kernel->projection_defect(tau.value_at(0.5 * (tb[j] + tb[j + 1]))));
    }
    if (stats) stats->tau_kernel_defect = tau_defect;
    if (tau_defect > tau_tolerance) {
        throw InvalidExtensionDataError(
            "evolve_via_extension: tau leaves the kernel algebra, defect " +
            std::to_string(tau_defect));
    }

    // theta = Evol_N(Ad(zeta) tau), computed in the embedded picture.
    std::vector<AlgebraElement> samples;
    samples.reserve(static_cast<size_t>(n_int));
    for (int i = 0; i < n_int; ++i) {
        const double t = (i + 0.5) / n_int;
        const Matrix z = ext.section(zeta_q.at_time(t));
        const Matrix raw = z * tau.value_at(t) * z.partialPivLu().inverse();
        samples.push_back(
            algebra_from_coordinates(ext.total, ext.total->coordinates(raw)));
    }
    Control kernel_control = SampledControl(ext.total, std::move(samples));
    EvolutionStats kstats;
    Path theta = evolve(kernel_control, opt, &kstats);
    if (stats) stats->kernel = kstats;

    // Pointwise product theta * zeta on theta's grid; re-evolve the quotient
    // on exactly that grid so every node lookup is exact.
    Path zeta_q_out = evolve_with_times(gamma_q, theta.times, opt);
    Path out{ext.total, theta.times, {}};
    out.points.reserve(theta.times.size());
    for (size_t i = 0; i < theta.times.size(); ++i) {
        const Matrix z = ext.section(zeta_q_out.at_time(theta.times[i]));
        out.points.push_back(theta.points[i] * z);
    }
    return out;
}

} // namespace prodint
