#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "soie/angles.hpp"
#include "soie/errors.hpp"
#include "soie/metrics.hpp"
#include "soie/random.hpp"

using namespace soie;

TEST_CASE("tracking error handles exact, offset and sinusoidal deviations") {
    std::vector<double> target(1000), q(1000);
    const double dt = 0.01;

    for (std::size_t i = 0; i < q.size(); ++i) target[i] = 0.3 * std::sin(0.007 * i);
    q = target;
    CHECK(rms_tracking_error_deg(q, target, dt) == doctest::Approx(0.0));

    for (std::size_t i = 0; i < q.size(); ++i) q[i] = target[i] - deg_to_rad(2.0);
    CHECK(rms_tracking_error_deg(q, target, dt) == doctest::Approx(2.0).epsilon(1e-12));

    // Whole-period sinusoidal deviation of amplitude A has RMS A/sqrt(2).
    const double amp = deg_to_rad(3.0);
    const std::size_t n = 1000;
    const double omega = 2.0 * kPi * 5.0 / static_cast<double>(n);
    std::vector<double> t2(n, 0.0), q2(n);
    for (std::size_t i = 0; i < n; ++i) q2[i] = -amp * std::sin(omega * static_cast<double>(i));
    CHECK(rms_tracking_error_deg(q2, t2, dt) ==
          doctest::Approx(3.0 / std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("rms metrics are invariant to reversal and whole-trial concatenation") {
    std::vector<double> tau{0.4, -1.2, 0.9, 2.2, -0.3, 0.0, 1.1};
    std::vector<double> rev(tau.rbegin(), tau.rend());
    CHECK(rms_effort_nm(tau, 0.01) == doctest::Approx(rms_effort_nm(rev, 0.01)).epsilon(1e-15));

    std::vector<double> doubled(tau);
    doubled.insert(doubled.end(), tau.begin(), tau.end());
    CHECK(rms_effort_nm(doubled, 0.01) ==
          doctest::Approx(rms_effort_nm(tau, 0.01)).epsilon(1e-15));

    CHECK(rms_effort_nm(std::vector<double>(5, 3.0), 0.01) == doctest::Approx(3.0));
    CHECK(rms_effort_nm(std::vector<double>(5, 0.0), 0.01) == doctest::Approx(0.0));
}

TEST_CASE("snr follows the power ratio") {
    const std::vector<double> s{2.0, -2.0, 2.0, -2.0};
    const std::vector<double> n{1.0, -1.0, 1.0, -1.0};
    CHECK(snr_db(s, n) == doctest::Approx(6.02059991327962).epsilon(1e-12));
    CHECK(snr_db(s, s) == 0.0);
}

TEST_CASE("pearson correlation hits the exact poles and affine invariance") {
    std::vector<double> x(64), y(64);
    SeededStream rng = StreamKey{5, 0}.channel(Channel::sensing);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.normal();

    for (std::size_t i = 0; i < x.size(); ++i) y[i] = 2.0 * x[i];
    CHECK(pearson_r(x, y) == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = -x[i];
    CHECK(pearson_r(x, y) == doctest::Approx(-1.0).epsilon(1e-12));

    for (std::size_t i = 0; i < x.size(); ++i) y[i] = rng.normal();
    const double base = pearson_r(x, y);
    std::vector<double> x_aff(x);
    for (double& v : x_aff) v = 3.7 * v + 11.0;
    CHECK(std::abs(pearson_r(x_aff, y) - base) < 1e-12);
}

TEST_CASE("cross-correlation delay recovers constructed shifts") {
    const double dt = 0.01;
    std::vector<double> truth(2000), shifted(2000);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double t = dt * static_cast<double>(i);
        truth[i] = std::sin(2.031 * t) * std::sin(1.093 * t);
    }
    CHECK(xcorr_delay_s(truth, truth, dt) == doctest::Approx(0.0));

    for (std::size_t i = 0; i < truth.size(); ++i) {
        shifted[i] = i >= 5 ? truth[i - 5] : 0.0;
    }
    CHECK(xcorr_delay_s(shifted, truth, dt) == doctest::Approx(0.05).epsilon(1e-12));

    CHECK_THROWS_AS(xcorr_delay_s(std::vector<double>(8, 0.0), std::vector<double>(8, 0.0), dt),
                    ConfigError);
}

TEST_CASE("coactivation effort averages flexor plus rectified extensor") {
    const std::vector<double> flex(10, 1.0);
    const std::vector<double> ext(10, -1.0);
    CHECK(coactivation_effort_nm(flex, ext, 0.01) == doctest::Approx(2.0));
    CHECK(coactivation_effort_nm(std::vector<double>(10, 0.0), std::vector<double>(10, 0.0),
                                 0.01) == doctest::Approx(0.0));

    // Linearity against a direct-summation oracle.
    SeededStream rng = StreamKey{8, 1}.channel(Channel::motor);
    std::vector<double> f(50), e(50);
    for (std::size_t i = 0; i < f.size(); ++i) {
        f[i] = std::abs(rng.normal());
        e[i] = rng.normal();
    }
    const double c = 2.75;
    std::vector<double> fc(f), ec(e);
    for (double& v : fc) v *= c;
    for (double& v : ec) v *= c;
    CHECK(coactivation_effort_nm(fc, ec, 0.01) ==
          doctest::Approx(c * coactivation_effort_nm(f, e, 0.01)).epsilon(1e-12));
}

TEST_CASE("torque regression interpolates and clamps") {
    SUBCASE("exact line") {
        const std::vector<double> u{0.0, 1.0, 2.0, 3.0};
        const std::vector<double> tau{1.0, 3.0, 5.0, 7.0};
        const TorqueRegression fit = fit_torque_regression(u, tau);
        CHECK(fit.gain_nm_per_mv == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(fit.offset_nm == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("negative offset clamps and refits the gain") {
        const std::vector<double> u{1.0, 2.0, 3.0, 4.0};
        const std::vector<double> tau{0.5, 2.5, 4.5, 6.5};  // wants b = -1.5
        const TorqueRegression fit = fit_torque_regression(u, tau);
        CHECK(fit.offset_nm == 0.0);
        // One-parameter refit oracle: a = sum(u tau) / sum(u^2).
        double ut = 0.0, uu = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            ut += u[i] * tau[i];
            uu += u[i] * u[i];
        }
        CHECK(fit.gain_nm_per_mv == doctest::Approx(ut / uu).epsilon(1e-12));
    }
    SUBCASE("synthetic calibration ramp reproduces its generator") {
        const double a = 0.731, b = 0.214;
        std::vector<double> u, tau;
        for (double torque : {1.0, 2.0, 3.0, 4.0}) {
            for (int rep = 0; rep < 5; ++rep) {
                const double env = (torque - b) / a;
                u.push_back(env);
                tau.push_back(torque);
            }
        }
        const TorqueRegression fit = fit_torque_regression(u, tau);
        CHECK(fit.gain_nm_per_mv == doctest::Approx(a).epsilon(1e-9));
        CHECK(fit.offset_nm == doctest::Approx(b).epsilon(1e-9));
    }
    SUBCASE("constant envelope is rank deficient") {
        CHECK_THROWS_AS(
            fit_torque_regression(std::vector<double>(5, 2.0), std::vector<double>(5, 1.0)),
            NumericalError);
    }
}

TEST_CASE("metric normalization and the human cost weights") {
    const std::vector<double> values{2.0, 6.0, 3.5, 5.0};
    CHECK(normalize_metric(values, 2.0) == doctest::Approx(0.0));
    CHECK(normalize_metric(values, 6.0) == doctest::Approx(1.0));
    CHECK(normalize_metric(values, 4.0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(normalize_metric(std::vector<double>(3, 1.0), 1.0), ConfigError);

    CHECK(human_cost(1.0, 0.0) == doctest::Approx(0.70));
    CHECK(human_cost(0.0, 1.0) == doctest::Approx(0.30));
    CHECK(human_cost(0.0, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("paired t-test matches a frozen reference") {
    const std::vector<double> x{5.1, 4.8, 6.0, 5.6, 4.9, 5.3, 5.8, 5.2, 4.7, 5.5};
    const std::vector<double> y{4.9, 4.6, 5.5, 5.9, 4.6, 5.1, 5.5, 5.4, 4.4, 5.0};
    const PairedTestResult res = paired_test(x, y, PairedTestKind::TTest);
    CHECK(res.statistic == doctest::Approx(2.4096579867074936).epsilon(1e-12));
    CHECK(res.p_value == doctest::Approx(0.0392710396940916).epsilon(1e-9));

    const std::vector<double> d{1.0, 2.0, 3.0, 4.0, 5.0};
    const std::vector<double> zero(5, 0.0);
    const PairedTestResult res5 = paired_test(d, zero, PairedTestKind::TTest);
    CHECK(res5.statistic == doctest::Approx(4.242640687119285).epsilon(1e-12));
    CHECK(res5.p_value == doctest::Approx(0.013235599563682695).epsilon(1e-9));
}

TEST_CASE("paired t-test edge cases") {
    const std::vector<double> x{1.0, 2.0, 3.0, 4.0, 5.0};
    const PairedTestResult same = paired_test(x, x, PairedTestKind::TTest);
    CHECK(same.p_value == doctest::Approx(1.0));
    CHECK(!same.zero_variance);

    std::vector<double> yshift(x);
    for (double& v : yshift) v -= 1.0;
    const PairedTestResult degen = paired_test(x, yshift, PairedTestKind::TTest);
    CHECK(degen.zero_variance);
    CHECK(degen.p_value == doctest::Approx(0.0));

    CHECK_THROWS_AS(paired_test(std::vector<double>{1, 2}, std::vector<double>{1, 2},
                                PairedTestKind::TTest),
                    ConfigError);
}

namespace {

// Brute-force signed-rank oracle: enumerate all 2^n sign assignments of the
// tie-averaged ranks and compute the two-sided tail probability of W+.
double wilcoxon_bruteforce_p(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> d;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] != y[i]) d.push_back(x[i] - y[i]);
    }
    const std::size_t n = d.size();
    std::vector<double> abs_d(n);
    for (std::size_t i = 0; i < n; ++i) abs_d[i] = std::abs(d[i]);

    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n; ++i) {
        double below = 0.0, equal = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (abs_d[j] < abs_d[i]) ++below;
            if (abs_d[j] == abs_d[i]) ++equal;
        }
        ranks[i] = below + 0.5 * (equal + 1.0);
    }
    double w_obs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (d[i] > 0.0) w_obs += ranks[i];
    }

    std::size_t le = 0, ge = 0;
    const std::size_t total = std::size_t{1} << n;
    for (std::size_t mask = 0; mask < total; ++mask) {
        double w = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask & (std::size_t{1} << i)) w += ranks[i];
        }
        if (w <= w_obs + 1e-12) ++le;
        if (w >= w_obs - 1e-12) ++ge;
    }
    const double p = 2.0 * std::min(le, ge) / static_cast<double>(total);
    return std::min(1.0, p);
}

} // namespace

TEST_CASE("wilcoxon matches exhaustive enumeration at n = 10") {
    // Tied magnitudes exercise the average-rank path against the brute force.
    const std::vector<double> x{5.1, 4.8, 6.0, 5.6, 4.9, 5.3, 5.8, 5.2, 4.7, 5.5};
    const std::vector<double> y{4.9, 4.6, 5.5, 5.9, 4.6, 5.1, 5.5, 5.4, 4.4, 5.0};
    const PairedTestResult res = paired_test(x, y, PairedTestKind::Wilcoxon);
    CHECK(res.p_value == doctest::Approx(wilcoxon_bruteforce_p(x, y)).epsilon(1e-12));

    // Tie-free case with an external reference value.
    const std::vector<double> xf{5.10, 4.80, 6.00, 5.60, 4.90, 5.30, 5.80, 5.20, 4.70, 5.50};
    const std::vector<double> yf{4.99, 4.58, 5.53, 5.94, 4.64, 5.06, 5.45, 5.51, 4.32, 5.05};
    const PairedTestResult tf = paired_test(xf, yf, PairedTestKind::Wilcoxon);
    CHECK(tf.p_value == doctest::Approx(0.10546875).epsilon(1e-12));
    CHECK(tf.p_value == doctest::Approx(wilcoxon_bruteforce_p(xf, yf)).epsilon(1e-12));

    SeededStream rng = StreamKey{17, 0}.channel(Channel::haptic);
    for (int rep = 0; rep < 5; ++rep) {
        std::vector<double> a(9), b(9);
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = rng.normal();
            b[i] = rng.normal() + 0.4;
        }
        const PairedTestResult r = paired_test(a, b, PairedTestKind::Wilcoxon);
        CHECK(r.p_value == doctest::Approx(wilcoxon_bruteforce_p(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("wilcoxon rejects all-zero differences and large n uses the approximation") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    CHECK_THROWS_AS(paired_test(x, x, PairedTestKind::Wilcoxon), ConfigError);

    SeededStream rng = StreamKey{23, 0}.channel(Channel::haptic);
    std::vector<double> a(40), b(40);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = rng.normal();
        b[i] = rng.normal() + 1.2;
    }
    const PairedTestResult r = paired_test(a, b, PairedTestKind::Wilcoxon);
    CHECK(r.p_value < 0.001);
}

TEST_CASE("t-test p-values are uniform under the null") {
    // Kolmogorov-Smirnov sanity check at alpha = 0.001 over 1e4 resamples.
    const std::size_t resamples = 10000;
    const std::size_t n = 20;
    std::vector<double> ps;
    ps.reserve(resamples);
    for (std::size_t rep = 0; rep < resamples; ++rep) {
        SeededStream rng = StreamKey{777, rep}.channel(Channel::sensing);
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.normal();
            y[i] = rng.normal();
        }
        ps.push_back(paired_test(x, y, PairedTestKind::TTest).p_value);
    }
    std::sort(ps.begin(), ps.end());
    double d_stat = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const double ecdf_hi = static_cast<double>(i + 1) / static_cast<double>(ps.size());
        const double ecdf_lo = static_cast<double>(i) / static_cast<double>(ps.size());
        d_stat = std::max(d_stat, std::abs(ecdf_hi - ps[i]));
        d_stat = std::max(d_stat, std::abs(ps[i] - ecdf_lo));
    }
    const double crit = 1.949 / std::sqrt(static_cast<double>(resamples));
    CHECK(d_stat < crit);
}

TEST_CASE("metric summary reports mean, std and count") {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    const MetricSummary s = summarize(v);
    CHECK(s.n == 4);
    CHECK(s.mean == doctest::Approx(2.5));
    CHECK(s.std_dev == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-12));
}
