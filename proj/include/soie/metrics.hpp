#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace soie {

/// Per-trial values of one metric with their summary statistics.
struct MetricSummary {
    std::vector<double> values;
    double mean = 0.0;
    double std_dev = 0.0;
    std::size_t n = 0;
};

MetricSummary summarize(std::span<const double> values);

/// RMS of (target - q), inputs in radians, result in degrees.
double rms_tracking_error_deg(std::span<const double> q_rad, std::span<const double> target_rad,
                              double dt_s);

/// RMS of the interaction torque over one trial.
double rms_effort_nm(std::span<const double> torque_nm, double dt_s);

/// 10 log10 of the mean-square power ratio.
double snr_db(std::span<const double> signal, std::span<const double> noise);

double pearson_r(std::span<const double> x, std::span<const double> y);

/// Lag (s) maximizing the zero-mean normalized cross-correlation between the
/// prediction and the truth; positive when the prediction lags. Searched over
/// +-window_s, ties resolved toward the smallest |lag|.
double xcorr_delay_s(std::span<const double> predicted, std::span<const double> truth,
                     double dt_s, double window_s = 2.0);

/// Mean of (tau_flexor + |tau_extensor|) over the trial.
double coactivation_effort_nm(std::span<const double> tau_flexor,
                              std::span<const double> tau_extensor, double dt_s);

/// Least-squares fit of torque = a * envelope + b with both coefficients
/// clamped nonnegative (active-set on the two-parameter problem).
struct TorqueRegression {
    double gain_nm_per_mv = 0.0;
    double offset_nm = 0.0;
};

TorqueRegression fit_torque_regression(std::span<const double> envelope_mv,
                                       std::span<const double> torque_nm);

/// (value - min) / (max - min) over the participant's trial means, clamped to [0, 1].
double normalize_metric(std::span<const double> participant_values, double value);

/// Weighted normalized error-plus-effort cost, J_h = 0.70 e_n + 0.30 tau_n.
double human_cost(double normalized_error, double normalized_effort);

enum class PairedTestKind { TTest, Wilcoxon };

struct PairedTestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    bool zero_variance = false;  // constant nonzero difference; p forced to 0
};

/// Two-sided paired t-test (exact t CDF through the incomplete beta) or
/// Wilcoxon signed-rank (zero differences dropped; exact distribution up to
/// n = 25, normal approximation with tie correction beyond).
PairedTestResult paired_test(std::span<const double> x, std::span<const double> y,
                             PairedTestKind kind);

/// Streaming accumulator for the Pearson correlation of pooled series.
class CorrelationAccumulator {
public:
    void add(double x, double y);
    double r() const;
    std::size_t count() const { return n_; }

private:
    std::size_t n_ = 0;
    double sx_ = 0.0, sy_ = 0.0, sxx_ = 0.0, syy_ = 0.0, sxy_ = 0.0;
};

} // namespace soie
