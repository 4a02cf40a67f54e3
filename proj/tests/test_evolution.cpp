#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "prodint/evolution.hpp"

using namespace prodint;

namespace {

AlgebraElement coeff_elem(const DescriptorPtr& d, std::initializer_list<double> c) {
    Vector v(d->algebra_dim());
    int i = 0;
    for (double x : c) v[i++] = x;
    return algebra_from_coordinates(d, v);
}

Control random_step(std::mt19937_64& rng, const DescriptorPtr& d, int pieces,
                    double scale, int denom = 8) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> pick(1, denom - 1);
    std::vector<double> bp{0.0};
    while (static_cast<int>(bp.size()) < pieces) {
        const double b = static_cast<double>(pick(rng)) / denom;
        if (std::find(bp.begin(), bp.end(), b) == bp.end()) bp.push_back(b);
    }
    std::sort(bp.begin(), bp.end());
    bp.push_back(1.0);
    std::vector<AlgebraElement> vals;
    for (int j = 0; j < pieces; ++j) {
        Vector c(d->algebra_dim());
        for (int i = 0; i < c.size(); ++i) c[i] = scale * u(rng);
        vals.push_back(algebra_from_coordinates(d, c));
    }
    return StepControl(d, std::move(bp), std::move(vals));
}

double path_sup_distance(const Path& a, const Path& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.times.size(); ++i) {
        m = std::max(m, max_norm(a.points[i] - b.at_time(a.times[i])));
    }
    return m;
}

} // namespace

TEST_CASE("evolve_step: zero control gives the constant identity path") {
    auto d = GroupDescriptor::general_linear(2);
    Path p = evolve_step(zero_step_control(d).step(), 64);
    for (const auto& g : p.points) {
        CHECK(max_norm(g - Matrix::Identity(2, 2)) < 1e-15);
    }
}

TEST_CASE("evolve_step: constant control is the one-parameter group") {
    auto so3 = GroupDescriptor::special_orthogonal(3);
    auto v = coeff_elem(so3, {0.4, -0.2, 0.9});
    Path p = evolve_step(constant_control(v).step(), 128);
    for (size_t i = 0; i < p.times.size(); i += 16) {
        CHECK(max_norm(p.points[i] - dense_exp(p.times[i] * v.mat)) < 1e-13);
    }
}

TEST_CASE("evolve_step: two pieces compose the exponentials") {
    auto sl2 = GroupDescriptor::special_linear(2);
    auto v = coeff_elem(sl2, {0.7, 0.0, 0.3});
    auto w = coeff_elem(sl2, {0.0, -0.5, 0.2});
    Control c = StepControl(sl2, {0.0, 0.5, 1.0}, {v, w});
    Path p = evolve_step(c.step(), 64);
    const Matrix expect = dense_exp(0.5 * v.mat) * dense_exp(0.5 * w.mat);
    CHECK(max_norm(p.points.back() - expect) < 1e-14);
}

TEST_CASE("evolve_picard: zero control converges in one iteration") {
    auto d = GroupDescriptor::general_linear(2);
    Control zero = sampled_from(d, 32, [&](double) { return Matrix(Matrix::Zero(2, 2)); });
    EvolutionStats stats;
    Path p = evolve_picard(zero, {}, &stats);
    CHECK(stats.picard_iterations == 1);
    CHECK(max_norm(p.points.back() - Matrix::Identity(2, 2)) == 0.0);
}

TEST_CASE("evolve_picard: scalar constant reproduces exp(a t)") {
    auto sc = GroupDescriptor::scalar_additive();
    const double a = 0.5;
    Control c = sampled_from(sc, 1024, [&](double) {
        return Matrix(a * Matrix::Ones(1, 1));
    });
    Path p = evolve_picard(c);
    for (size_t i = 0; i < p.times.size(); i += 128) {
        CHECK(std::abs(p.points[i](0, 0) - std::exp(a * p.times[i])) < 1e-8);
    }
}

TEST_CASE("evolve_picard: nilpotent constant truncates the series") {
    auto sl2 = GroupDescriptor::special_linear(2);
    auto e = coeff_elem(sl2, {0.5, 0.0, 0.0}); // E/2, nilpotent
    Control c = sampled_from(sl2, 256, [&](double) { return Matrix(e.mat); });
    Path p = evolve_picard(c);
    const Matrix expect = Matrix::Identity(2, 2) + e.mat;
    CHECK(max_norm(p.points.back() - expect) < 1e-11);
}

TEST_CASE("evolve_picard rejects controls above the contraction bound") {
    auto sc = GroupDescriptor::scalar_additive();
    Control c = sampled_from(sc, 64, [](double) {
        return Matrix(0.8 * Matrix::Ones(1, 1));
    });
    CHECK_THROWS_AS(evolve_picard(c), ContractionBoundError);
}

TEST_CASE("evolve equals evolve_step on step controls (cross-method oracle)") {
    auto gl2 = GroupDescriptor::general_linear(2);
    std::mt19937_64 rng(51);
    Control c = random_step(rng, gl2, 5, 1.0); // total mass well above theta_max
    EvolveOptions opt;
    opt.grid = 256;
    EvolutionStats stats;
    Path via_evolve = evolve(c, opt, &stats);
    Path direct = evolve_step(c.step(), 256);
    CHECK(stats.partition.size() > 2); // the partition actually kicked in
    CHECK(path_sup_distance(direct, via_evolve) < 1e-12);
}

TEST_CASE("evolve: sampled constant of mass 4 reaches exp(v)") {
    auto so3 = GroupDescriptor::special_orthogonal(3);
    auto v = coeff_elem(so3, {4.0, 0.0, 0.0});
    REQUIRE(op_norm(v.mat) == Catch::Approx(4.0));
    Control c = sampled_from(so3, 1024, [&](double) { return Matrix(v.mat); });
    EvolutionStats stats;
    Path p = evolve(c, {}, &stats);
    CHECK(stats.partition.size() >= 9); // >= 8 pieces
    CHECK(max_norm(p.points.back() - dense_exp(v.mat)) < 1e-7);
    CHECK(stats.defect_max < 1e-8);
}

TEST_CASE("evolve agrees with manual uniform-subdivision globalization") {
    auto sl2 = GroupDescriptor::special_linear(2);
    std::mt19937_64 rng(53);
    Control c = random_step(rng, sl2, 4, 1.2);
    const int n = 4;
    auto pieces = subdivide(c, n);
    Matrix g = Matrix::Identity(2, 2);
    for (const auto& piece : pieces) {
        g = g * evolve_step(piece.step(), 16).points.back();
    }
    Path p = evolve(c, {});
    CHECK(max_norm(p.points.back() - g) < 1e-10);
}

TEST_CASE("evolve_right: constants coincide with the left evolution") {
    auto sl2 = GroupDescriptor::special_linear(2);
    auto v = coeff_elem(sl2, {0.3, 0.2, -0.4});
    Path r = evolve_right(constant_control(v), {});
    for (size_t i = 0; i < r.times.size(); i += 128) {
        CHECK(max_norm(r.points[i] - dense_exp(r.times[i] * v.mat)) < 1e-12);
    }
}

TEST_CASE("evolve_right: zero control gives the identity path") {
    auto d = GroupDescriptor::general_linear(2);
    Path r = evolve_right(zero_step_control(d), {});
    CHECK(max_norm(r.points.back() - Matrix::Identity(2, 2)) < 1e-15);
}

TEST_CASE("evolve_right equals evolve on an abelian group") {
    auto sc = GroupDescriptor::scalar_additive();
    Control c = sampled_from(sc, 256, [](double t) {
        return Matrix(std::sin(3.0 * t) * 0.4 * Matrix::Ones(1, 1));
    });
    Path l = evolve(c, {});
    Path r = evolve_right(c, {});
    CHECK(path_sup_distance(l, r) < 1e-12);
}

TEST_CASE("left_log_derivative: identity path gives the zero control") {
    auto d = GroupDescriptor::general_linear(2);
    Path p{d, uniform_times(64),
           std::vector<Matrix>(65, Matrix::Identity(2, 2))};
    Control back = left_log_derivative(p);
    CHECK(lp_seminorm(back, Lp::Inf, MatrixNorm::Max) == 0.0);
}

TEST_CASE("left_log_derivative recovers constants and step values") {
    auto so3 = GroupDescriptor::special_orthogonal(3);
    auto v = coeff_elem(so3, {0.8, -0.1, 0.4});
    Path p = evolve_step(constant_control(v).step(), 1024);
    Control back = left_log_derivative(p);
    CHECK(control_sup_distance(back, constant_control(v), MatrixNorm::Max) < 1e-6);

    std::mt19937_64 rng(57);
    Control c = random_step(rng, so3, 3, 1.0);
    Path ps = evolve_step(c.step(), 512);
    Control recovered = left_log_derivative(ps);
    CHECK(control_sup_distance(recovered, c, MatrixNorm::Max) < 1e-9);
}

TEST_CASE("round trip error is second order in the grid") {
    auto sl2 = GroupDescriptor::special_linear(2);
    auto gamma_fn = [&](double t) {
        Vector c(3);
        c << std::sin(2.0 * M_PI * t), 0.0, std::cos(2.0 * M_PI * t);
        return sl2->from_coordinates(c);
    };
    double prev = 0.0;
    for (int n : {256, 512, 1024}) {
        Control g = sampled_from(sl2, n, gamma_fn);
        EvolveOptions opt;
        opt.grid = n;
        Control back = left_log_derivative(evolve(g, opt));
        const double err = control_l1_distance(back, g);
        if (prev > 0.0) {
            CHECK(err < prev / 2.5); // empirical order comfortably above 1
        }
        prev = err;
    }
}

TEST_CASE("right_log_derivative mirrors the left one") {
    auto gl2 = GroupDescriptor::general_linear(2);
    std::mt19937_64 rng(61);
    Control c = random_step(rng, gl2, 3, 0.8);
    Path p = evolve(c, {});

    Control right = right_log_derivative(p);
    Control left_of_inv = left_log_derivative(pointwise_inverse(p));
    CHECK(control_sup_distance(right, scale_control(left_of_inv, -1.0),
                               MatrixNorm::Max) < 1e-10);

    auto v = coeff_elem(gl2, {0.2, 0.4, -0.1, 0.3});
    Path one_param = evolve_step(constant_control(v).step(), 512);
    CHECK(control_sup_distance(right_log_derivative(one_param), constant_control(v),
                               MatrixNorm::Max) < 1e-6);

    Path ident{gl2, uniform_times(16), std::vector<Matrix>(17, Matrix::Identity(2, 2))};
    CHECK(lp_seminorm(right_log_derivative(ident), Lp::Inf, MatrixNorm::Max) == 0.0);
}

TEST_CASE("log derivative reports paths too coarse for one-step logs") {
    auto sl2 = GroupDescriptor::special_linear(2);
    auto v = coeff_elem(sl2, {0.0, 0.0, 3.0});
    Path p{sl2, {0.0, 1.0}, {Matrix::Identity(2, 2), dense_exp(v.mat)}};
    CHECK_THROWS_AS(left_log_derivative(p), PathTooCoarseError);
}

TEST_CASE("odot: zero is the identity of the control group") {
    auto gl2 = GroupDescriptor::general_linear(2);
    std::mt19937_64 rng(67);
    Control c = random_step(rng, gl2, 3, 0.7);
    Control zero = zero_step_control(gl2);
    EvolveOptions opt;
    opt.grid = 512;
    CHECK(control_l1_distance(odot(zero, c, opt), c) < 1e-10);
    CHECK(control_l1_distance(odot(c, zero, opt), c) < 1e-12);
}

TEST_CASE("odot on an abelian group is addition") {
    auto sc = GroupDescriptor::scalar_additive();
    Control a = sampled_from(sc, 256, [](double t) {
        return Matrix(0.3 * std::sin(5.0 * t) * Matrix::Ones(1, 1));
    });
    Control b = sampled_from(sc, 256, [](double t) {
        return Matrix(0.2 * t * Matrix::Ones(1, 1));
    });
    EvolveOptions opt;
    opt.grid = 256;
    CHECK(control_l1_distance(odot(a, b, opt), add_controls(a, b)) < 1e-12);
}

TEST_CASE("odot homomorphism: Evol(g1 . g2) = Evol(g1) Evol(g2)") {
    auto gl2 = GroupDescriptor::general_linear(2);
    std::mt19937_64 rng(71);
    Control g1 = random_step(rng, gl2, 3, 0.6);
    Control g2 = random_step(rng, gl2, 3, 0.6);
    EvolveOptions opt;
    opt.grid = 512;
    Path p1 = evolve(g1, opt);
    Path prod = evolve(odot(g1, g2, opt), opt);
    Path p2 = evolve(g2, opt);
    double worst = 0.0;
    for (int i = 0; i <= 512; ++i) {
        const double t = static_cast<double>(i) / 512;
        worst = std::max(worst, max_norm(prod.at_time(t) - p1.at_time(t) * p2.at_time(t)));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("odot_inverse: zero, abelian negation, and the group axiom") {
    auto sc = GroupDescriptor::scalar_additive();
    EvolveOptions opt;
    opt.grid = 256;
    Control zero = zero_step_control(sc);
    CHECK(lp_seminorm(odot_inverse(zero, opt), Lp::Inf, MatrixNorm::Max) < 1e-15);

    Control a = sampled_from(sc, 256, [](double t) {
        return Matrix(0.4 * std::cos(2.0 * t) * Matrix::Ones(1, 1));
    });
    CHECK(control_l1_distance(odot_inverse(a, opt), scale_control(a, -1.0)) < 1e-12);

    auto gl2 = GroupDescriptor::general_linear(2);
    std::mt19937_64 rng(73);
    Control g = random_step(rng, gl2, 2, 0.5);
    Control ginv = odot_inverse(g, opt);
    Control should_be_zero = odot(g, ginv, opt);
    CHECK(lp_seminorm(should_be_zero, Lp::One, MatrixNorm::Operator) < 1e-6);
}

TEST_CASE("evol_tangent_at_zero: zero, constant, and linear controls") {
    auto sl2 = GroupDescriptor::special_linear(2);
    CHECK(max_norm(evol_tangent_at_zero(zero_step_control(sl2), 0.7).mat) == 0.0);

    auto v = coeff_elem(sl2, {0.5, -0.2, 0.1});
    CHECK(max_norm(evol_tangent_at_zero(constant_control(v), 1.0).mat - v.mat) < 1e-15);

    Control lin = sampled_from(sl2, 1024, [&](double t) { return Matrix(t * v.mat); });
    CHECK(max_norm(evol_tangent_at_zero(lin, 1.0).mat - 0.5 * v.mat) < 1e-12);
}

TEST_CASE("tangent companion: (1/eps) log Evol(eps gamma) approaches the integral") {
    auto sl2 = GroupDescriptor::special_linear(2);
    Control g = sampled_from(sl2, 512, [&](double t) {
        Vector c(3);
        c << std::sin(2.0 * M_PI * t), 0.0, std::cos(2.0 * M_PI * t);
        return sl2->from_coordinates(c);
    });
    const Matrix target = evol_tangent_at_zero(g, 1.0).mat;
    EvolveOptions opt;
    opt.grid = 512;
    auto defect = [&](double eps) {
        Path p = evolve(scale_control(g, eps), opt);
        return max_norm(dense_log(p.points.back()) / eps - target);
    };
    const double e1 = defect(1e-3);
    const double e2 = defect(5e-4);
    CHECK(e1 / e2 > 1.6);
    CHECK(e1 / e2 < 2.4);
}

TEST_CASE("left translation does not change the left logarithmic derivative") {
    auto gl2 = GroupDescriptor::general_linear(2);
    std::mt19937_64 rng(79);
    Control c = random_step(rng, gl2, 3, 0.8);
    Path p = evolve(c, {});
    const Matrix g = dense_exp(Matrix(Matrix::Identity(2, 2) * 0.4 +
                                      0.3 * Matrix::Ones(2, 2)));
    Path shifted{p.desc, p.times, {}};
    for (const auto& q : p.points) shifted.points.push_back(g * q);
    CHECK(control_sup_distance(left_log_derivative(p), left_log_derivative(shifted),
                               MatrixNorm::Max) < 1e-9);
}

TEST_CASE("pointwise product and inverse rules hold to second order") {
    auto gl2 = GroupDescriptor::general_linear(2);
    auto v = coeff_elem(gl2, {0.3, -0.2, 0.5, 0.1});
    auto w = coeff_elem(gl2, {-0.1, 0.4, 0.2, -0.3});
    auto rule_errors = [&](int n) {
        Path p1 = evolve_step(constant_control(v).step(), n);
        Path p2 = evolve_step(constant_control(w).step(), n);
        const double h = 1.0 / n;
        double worst_prod = 0.0;
        double worst_inv = 0.0;
        for (size_t i = 2; i + 2 < p1.times.size(); i += 7) {
            const Matrix prod_dot =
                (p1.points[i + 1] * p2.points[i + 1] - p1.points[i - 1] * p2.points[i - 1]) /
                (2.0 * h);
            const Matrix g1dot = p1.points[i] * v.mat; // eta' = eta gamma
            const Matrix g2dot = p2.points[i] * w.mat;
            worst_prod = std::max(
                worst_prod,
                max_norm(prod_dot - (g1dot * p2.points[i] + p1.points[i] * g2dot)));
            const Matrix inv_i = p1.points[i].partialPivLu().inverse();
            const Matrix inv_p = p1.points[i + 1].partialPivLu().inverse();
            const Matrix inv_m = p1.points[i - 1].partialPivLu().inverse();
            worst_inv = std::max(
                worst_inv, max_norm((inv_p - inv_m) / (2.0 * h) + inv_i * g1dot * inv_i));
        }
        return std::make_pair(worst_prod, worst_inv);
    };
    auto [p256, i256] = rule_errors(256);
    auto [p512, i512] = rule_errors(512);
    CHECK(p256 < 1e-4);
    CHECK(i256 < 1e-4);
    CHECK(p256 / p512 > 3.0);
    CHECK(p256 / p512 < 5.0);
    CHECK(i256 / i512 > 3.0);
    CHECK(i256 / i512 < 5.0);
}

TEST_CASE("method equivalence: Picard matches the exact product on step controls") {
    auto sl2 = GroupDescriptor::special_linear(2);
    std::mt19937_64 rng(83);
    Control c = random_step(rng, sl2, 4, 0.22);
    const double mass = lp_seminorm(c, Lp::One, MatrixNorm::Operator);
    REQUIRE(mass <= 0.5);
    Path exact = evolve_step(c.step(), 512);
    EvolveOptions opt;
    opt.grid = 512;
    Path picard = evolve_picard(c, opt);
    CHECK(path_sup_distance(exact, picard) < 1e-10);
}

TEST_CASE("refining a regulated control refines its evolution") {
    auto sl2 = GroupDescriptor::special_linear(2);
    Control g = sampled_from(sl2, 1024, [&](double t) {
        Vector c(3);
        c << 0.4 * std::sin(2.0 * M_PI * t), 0.0, 0.4 * std::cos(2.0 * M_PI * t);
        return sl2->from_coordinates(c);
    }, PClass::Regulated);
    EvolveOptions opt;
    opt.grid = 1024;
    Path reference = evolve(g, opt);
    double prev = std::numeric_limits<double>::infinity();
    for (int m : {4, 16, 64}) {
        Control approx = step_approximate(g.sampled(), m);
        Path pa = evolve(approx, opt);
        double sup = 0.0;
        for (size_t i = 0; i < reference.times.size(); i += 8) {
            sup = std::max(sup,
                           max_norm(reference.points[i] - pa.at_time(reference.times[i])));
        }
        CHECK(sup < prev * 1.05);
        prev = sup;
    }
}

TEST_CASE("scalar evolutions equal exp of the running integral") {
    auto sc = GroupDescriptor::scalar_additive();
    Control g = sampled_from(sc, 512, [](double t) {
        return Matrix((0.6 * std::sin(7.0 * t) + 0.2) * Matrix::Ones(1, 1));
    });
    Path p = evolve(g, {});
    for (size_t i = 0; i < p.times.size(); i += 64) {
        const double expect = std::exp(evol_tangent_at_zero(g, p.times[i]).mat(0, 0));
        CHECK(std::abs(p.points[i](0, 0) - expect) < 1e-8);
    }
}

TEST_CASE("right/left duality on the nose") {
    auto so3 = GroupDescriptor::special_orthogonal(3);
    std::mt19937_64 rng(89);
    Control c = random_step(rng, so3, 3, 0.9);
    Path lhs = pointwise_inverse(evolve_right(c, {}));
    Path rhs = evolve(scale_control(c, -1.0), {});
    CHECK(path_sup_distance(lhs, rhs) < 1e-9);
}
