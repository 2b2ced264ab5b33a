#include "soie/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "soie/angles.hpp"
#include "soie/errors.hpp"

namespace soie {

namespace {

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double mean_square(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s / static_cast<double>(v.size());
}

void require_nonempty(std::span<const double> v, const char* who) {
    if (v.empty()) throw ConfigError(std::string(who) + ": empty series");
}

void require_equal_length(std::span<const double> a, std::span<const double> b, const char* who) {
    if (a.size() != b.size()) throw ConfigError(std::string(who) + ": length mismatch");
}

// Regularized incomplete beta I_x(a, b) by continued fraction (Lentz).
double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_cf(a, b, x) / a;
    }
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double dof) {
    const double x = dof / (dof + t * t);
    return incomplete_beta(0.5 * dof, 0.5, x);
}

double normal_two_sided_p(double z) {
    return std::erfc(std::abs(z) / std::sqrt(2.0));
}

PairedTestResult paired_t_test(std::span<const double> diffs) {
    const double n = static_cast<double>(diffs.size());
    const double mean = mean_of(diffs);
    double ss = 0.0;
    for (double d : diffs) ss += (d - mean) * (d - mean);
    const double sd = std::sqrt(ss / (n - 1.0));

    PairedTestResult res;
    if (sd == 0.0) {
        if (mean == 0.0) {
            res.statistic = 0.0;
            res.p_value = 1.0;
        } else {
            res.statistic = mean > 0.0 ? std::numeric_limits<double>::infinity()
                                       : -std::numeric_limits<double>::infinity();
            res.p_value = 0.0;
            res.zero_variance = true;
        }
        return res;
    }
    res.statistic = mean / (sd / std::sqrt(n));
    res.p_value = student_t_two_sided_p(res.statistic, n - 1.0);
    return res;
}

// Ranks of |d| with average ties, doubled so that tied averages stay integral.
std::vector<long> doubled_ranks(const std::vector<double>& abs_d) {
    const std::size_t n = abs_d.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return abs_d[a] < abs_d[b]; });

    std::vector<long> rank2(n, 0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && abs_d[order[j + 1]] == abs_d[order[i]]) ++j;
        // Average rank of positions i..j (1-based), doubled: (i+1 + j+1).
        const long r2 = static_cast<long>(i + j + 2);
        for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = r2;
        i = j + 1;
    }
    return rank2;
}

PairedTestResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y) {
    std::vector<double> d;
    d.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x[i] - y[i];
        if (v != 0.0) d.push_back(v);
    }
    if (d.empty()) {
        throw ConfigError("wilcoxon: no nonzero differences");
    }
    const std::size_t n = d.size();
    std::vector<double> abs_d(n);
    for (std::size_t i = 0; i < n; ++i) abs_d[i] = std::abs(d[i]);
    const std::vector<long> rank2 = doubled_ranks(abs_d);

    long w_plus2 = 0;
    long total2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total2 += rank2[i];
        if (d[i] > 0.0) w_plus2 += rank2[i];
    }

    PairedTestResult res;
    res.statistic = 0.5 * static_cast<double>(w_plus2);

    if (n <= 25) {
        // Exact null distribution of the doubled statistic by subset-sum counts.
        std::vector<double> dist(static_cast<std::size_t>(total2) + 1, 0.0);
        dist[0] = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const long r = rank2[i];
            for (long s = total2; s >= r; --s) {
                dist[static_cast<std::size_t>(s)] += dist[static_cast<std::size_t>(s - r)];
            }
        }
        const double norm = std::ldexp(1.0, static_cast<int>(n));  // 2^n
        double cdf_le = 0.0;
        double cdf_ge = 0.0;
        for (long s = 0; s <= total2; ++s) {
            if (s <= w_plus2) cdf_le += dist[static_cast<std::size_t>(s)];
            if (s >= w_plus2) cdf_ge += dist[static_cast<std::size_t>(s)];
        }
        res.p_value = std::min(1.0, 2.0 * std::min(cdf_le, cdf_ge) / norm);
        return res;
    }

    // Normal approximation with tie correction.
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    double tie_term = 0.0;
    std::vector<double> sorted(abs_d);
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    const double w_plus = 0.5 * static_cast<double>(w_plus2);
    double z = w_plus - mean;
    // Continuity correction toward the mean.
    if (z > 0.5) z -= 0.5;
    else if (z < -0.5) z += 0.5;
    else z = 0.0;
    z /= std::sqrt(var);
    res.p_value = normal_two_sided_p(z);
    return res;
}

} // namespace

MetricSummary summarize(std::span<const double> values) {
    MetricSummary s;
    s.values.assign(values.begin(), values.end());
    s.n = values.size();
    if (s.n == 0) return s;
    s.mean = mean_of(values);
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std_dev = s.n > 1 ? std::sqrt(ss / static_cast<double>(s.n - 1)) : 0.0;
    return s;
}

double rms_tracking_error_deg(std::span<const double> q_rad, std::span<const double> target_rad,
                              double dt_s) {
    require_nonempty(q_rad, "rms_tracking_error");
    require_equal_length(q_rad, target_rad, "rms_tracking_error");
    (void)dt_s;  // uniform sampling: (1/T) integral dt reduces to the sample mean
    double s = 0.0;
    for (std::size_t i = 0; i < q_rad.size(); ++i) {
        const double e = target_rad[i] - q_rad[i];
        s += e * e;
    }
    return rad_to_deg(std::sqrt(s / static_cast<double>(q_rad.size())));
}

double rms_effort_nm(std::span<const double> torque_nm, double dt_s) {
    require_nonempty(torque_nm, "rms_effort");
    (void)dt_s;
    return std::sqrt(mean_square(torque_nm));
}

double snr_db(std::span<const double> signal, std::span<const double> noise) {
    require_nonempty(signal, "snr_db");
    require_nonempty(noise, "snr_db");
    return 10.0 * std::log10(mean_square(signal) / mean_square(noise));
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
    require_nonempty(x, "pearson_r");
    require_equal_length(x, y, "pearson_r");
    CorrelationAccumulator acc;
    for (std::size_t i = 0; i < x.size(); ++i) acc.add(x[i], y[i]);
    return acc.r();
}

double xcorr_delay_s(std::span<const double> predicted, std::span<const double> truth,
                     double dt_s, double window_s) {
    require_equal_length(predicted, truth, "xcorr_delay");
    if (predicted.size() < 16) throw ConfigError("xcorr_delay: need at least 16 samples");
    if (dt_s <= 0.0) throw ConfigError("xcorr_delay: dt must be > 0");

    const std::size_t n = predicted.size();
    const double mp = mean_of(predicted);
    const double mt = mean_of(truth);
    const long max_lag =
        std::min(static_cast<long>(window_s / dt_s + 0.5), static_cast<long>(n) - 2);

    // Normalized over the overlapping segments (prefix-sum energies), so
    // neither direction of overlap shrinkage biases the peak location.
    std::vector<double> pe(n + 1, 0.0), te(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double pv = predicted[i] - mp;
        const double tv = truth[i] - mt;
        pe[i + 1] = pe[i] + pv * pv;
        te[i + 1] = te[i] + tv * tv;
    }

    const auto cross_corr = [&](long lag) {
        double s = 0.0;
        const long lo = std::max(0L, lag);
        const long hi = std::min(static_cast<long>(n), static_cast<long>(n) + lag);
        for (long t = lo; t < hi; ++t) {
            s += (predicted[static_cast<std::size_t>(t)] - mp) *
                 (truth[static_cast<std::size_t>(t - lag)] - mt);
        }
        const double ep = pe[static_cast<std::size_t>(hi)] - pe[static_cast<std::size_t>(lo)];
        const double et = te[static_cast<std::size_t>(hi - lag)] -
                          te[static_cast<std::size_t>(lo - lag)];
        const double norm = std::sqrt(ep * et);
        return norm > 0.0 ? s / norm : 0.0;
    };

    // Scan by increasing |lag| so exact ties resolve to the smallest delay.
    long best_lag = 0;
    double best = cross_corr(0);
    for (long l = 1; l <= max_lag; ++l) {
        for (long lag : {l, -l}) {
            const double c = cross_corr(lag);
            if (c > best) {
                best = c;
                best_lag = lag;
            }
        }
    }
    return static_cast<double>(best_lag) * dt_s;
}

double coactivation_effort_nm(std::span<const double> tau_flexor,
                              std::span<const double> tau_extensor, double dt_s) {
    require_nonempty(tau_flexor, "coactivation_effort");
    require_equal_length(tau_flexor, tau_extensor, "coactivation_effort");
    (void)dt_s;
    double s = 0.0;
    for (std::size_t i = 0; i < tau_flexor.size(); ++i) {
        s += tau_flexor[i] + std::abs(tau_extensor[i]);
    }
    return s / static_cast<double>(tau_flexor.size());
}

TorqueRegression fit_torque_regression(std::span<const double> envelope_mv,
                                       std::span<const double> torque_nm) {
    require_equal_length(envelope_mv, torque_nm, "fit_torque_regression");
    if (envelope_mv.size() < 2) throw ConfigError("fit_torque_regression: need >= 2 samples");

    const double n = static_cast<double>(envelope_mv.size());
    const double mu = mean_of(envelope_mv);
    const double mt = mean_of(torque_nm);
    double suu = 0.0;
    double sut = 0.0;
    double suu_raw = 0.0;
    double sut_raw = 0.0;
    for (std::size_t i = 0; i < envelope_mv.size(); ++i) {
        suu += (envelope_mv[i] - mu) * (envelope_mv[i] - mu);
        sut += (envelope_mv[i] - mu) * (torque_nm[i] - mt);
        suu_raw += envelope_mv[i] * envelope_mv[i];
        sut_raw += envelope_mv[i] * torque_nm[i];
    }
    if (suu == 0.0) {
        throw NumericalError("fit_torque_regression: constant envelope, rank deficient");
    }

    const double a_free = sut / suu;
    const double b_free = mt - a_free * mu;
    if (a_free >= 0.0 && b_free >= 0.0) return {a_free, b_free};

    // Active set on the two-parameter problem: refit with each coefficient
    // clamped to zero and keep the feasible candidate with the lower residual.
    const auto sse = [&](double a, double b) {
        double s = 0.0;
        for (std::size_t i = 0; i < envelope_mv.size(); ++i) {
            const double r = torque_nm[i] - a * envelope_mv[i] - b;
            s += r * r;
        }
        return s;
    };
    const TorqueRegression b_zero{std::max(0.0, sut_raw / suu_raw), 0.0};
    const TorqueRegression a_zero{0.0, std::max(0.0, mt)};
    (void)n;
    return sse(b_zero.gain_nm_per_mv, 0.0) <= sse(0.0, a_zero.offset_nm) ? b_zero : a_zero;
}

double normalize_metric(std::span<const double> participant_values, double value) {
    require_nonempty(participant_values, "normalize_metric");
    const auto [mn, mx] = std::minmax_element(participant_values.begin(),
                                              participant_values.end());
    if (*mx == *mn) throw ConfigError("normalize_metric: all values identical");
    return std::clamp((value - *mn) / (*mx - *mn), 0.0, 1.0);
}

double human_cost(double normalized_error, double normalized_effort) {
    return 0.70 * normalized_error + 0.30 * normalized_effort;
}

PairedTestResult paired_test(std::span<const double> x, std::span<const double> y,
                             PairedTestKind kind) {
    require_equal_length(x, y, "paired_test");
    if (x.size() < 5) throw ConfigError("paired_test: need at least 5 pairs");

    if (kind == PairedTestKind::TTest) {
        std::vector<double> d(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - y[i];
        return paired_t_test(d);
    }
    return wilcoxon_signed_rank(x, y);
}

void CorrelationAccumulator::add(double x, double y) {
    ++n_;
    sx_ += x;
    sy_ += y;
    sxx_ += x * x;
    syy_ += y * y;
    sxy_ += x * y;
}

double CorrelationAccumulator::r() const {
    if (n_ < 2) throw ConfigError("correlation needs at least 2 samples");
    const double n = static_cast<double>(n_);
    const double cov = sxy_ - sx_ * sy_ / n;
    const double vx = sxx_ - sx_ * sx_ / n;
    const double vy = syy_ - sy_ * sy_ / n;
    if (vx <= 0.0 || vy <= 0.0) {
        throw NumericalError("correlation undefined for a constant series");
    }
    return cov / std::sqrt(vx * vy);
}

} // namespace soie
