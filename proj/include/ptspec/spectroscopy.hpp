#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ptspec/dynamics.hpp"
#include "ptspec/master_equations.hpp"
#include "ptspec/process_tensor.hpp"

namespace ptspec {

/// Source of multi-time correlations on a uniform grid k dt, k <= max_steps().
class CorrelationEngine {
public:
    virtual ~CorrelationEngine() = default;
    virtual std::string name() const = 0;
    virtual double dt() const = 0;
    virtual std::size_t max_steps() const = 0;
    virtual CorrelationSeries correlate(const InterventionSchedule& sched) const = 0;
    /// Same layout as sweep_intervention.
    virtual CMatrix sweep(const InterventionSchedule& sched, std::span<const std::size_t> which,
                          std::size_t first_step, std::size_t last_step) const;
};

class PtEngine final : public CorrelationEngine {
public:
    PtEngine(std::shared_ptr<const ProcessTensorMPO> pt, const SystemModel& s);
    std::string name() const override { return "pt"; }
    double dt() const override { return pt_->dt; }
    std::size_t max_steps() const override { return pt_->n_steps; }
    CorrelationSeries correlate(const InterventionSchedule& sched) const override;
    CMatrix sweep(const InterventionSchedule& sched, std::span<const std::size_t> which,
                  std::size_t first_step, std::size_t last_step) const override;

private:
    std::shared_ptr<const ProcessTensorMPO> pt_;
    SystemPropagator propagator_;
};

class MasterEquationEngine final : public CorrelationEngine {
public:
    MasterEquationEngine(LindbladModel model, double dt, std::size_t n_steps);
    std::string name() const override { return model_.flavor == MeFlavor::PME ? "pme" : "wcme"; }
    double dt() const override { return dt_; }
    std::size_t max_steps() const override { return n_steps_; }
    CorrelationSeries correlate(const InterventionSchedule& sched) const override;
    const LindbladModel& model() const { return model_; }

private:
    LindbladModel model_;
    double dt_;
    std::size_t n_steps_;
    std::optional<PolaronDressing> dressing_;
};

/// Tr[V(t) V(0) rho_0] for t = k dt, k < n_t.
CorrelationSeries linear_response(const CorrelationEngine& engine, std::size_t n_t,
                                  Transition which = Transition::V2);

/// Third-order pathways at zero waiting time; entry (a, b) is t1 = a dt, t3 = b dt.
struct ResponseSet {
    double dt = 0.0;
    CMatrix r1, r2, r3, r4;

    std::size_t n1() const { return static_cast<std::size_t>(r1.rows()); }
    std::size_t n3() const { return static_cast<std::size_t>(r1.cols()); }
};

/// Operator sides (tau1, tau2, tau3, tau4) of pathway 1..4.
std::array<Side, 4> pathway_sides(int pathway);
/// Schedule of one pathway with tau1 = 0, tau2 = tau3 = t1_step and the trailing operator at
/// tau4 = t1_step.
InterventionSchedule pathway_schedule(int pathway, std::size_t t1_step, Transition which);

ResponseSet response_pathways(const CorrelationEngine& engine, std::size_t n1, std::size_t n3,
                              Transition which = Transition::V2);

/// Half-cosine apodization of the sampled span with zero padding to pad_factor times its length.
struct Window {
    bool half_cosine = true;
    std::size_t pad_factor = 4;
    /// Also report k = 1 - N_pad/2 .. -1, for lines broader than their center frequency.
    bool negative_frequencies = false;
};

/// X_k = sum_n c_n w_n x_n exp(2 pi i k n / N_pad), k = 0 .. N_pad - 1, with c_0 = 1/2.
CVector windowed_dft(std::span<const cplx> samples, const Window& window);
/// Window weights w_n c_n applied by windowed_dft.
std::vector<double> window_weights(std::size_t n, const Window& window);

struct Spectrum1D {
    std::vector<double> omega;
    std::vector<double> values;
};

/// A(w) = Re sum_t c_t w(t) R(t) e^{i w t} dt on the non-negative frequencies of the padded grid,
/// or on all of them when window.negative_frequencies is set.
/// Throws DomainError when the times are not uniform.
Spectrum1D absorption_spectrum(const CorrelationSeries& series, const Window& window = {});

struct Spectrum2D {
    std::vector<double> w_exc;
    std::vector<double> w_det;
    Eigen::MatrixXd total;  // rows w_exc, columns w_det
    CMatrix rephasing;
    CMatrix nonrephasing;
};

Spectrum2D spectrum_2d(const ResponseSet& rs, const Window& window = {});

struct PeakOptions {
    double prominence = 0.05;  // fraction of the global maximum
};

struct Peak {
    double position = 0.0;
    double height = 0.0;
};

struct PeakReport {
    std::vector<Peak> diagonal_peaks;  // by decreasing height
    std::optional<double> splitting;
    bool cross_peaks_present = false;
    /// height of the lower-frequency peak over the higher-frequency one
    std::optional<double> amplitude_ratio;
};

PeakReport peak_analysis(const Spectrum1D& sp, const PeakOptions& options = {});
PeakReport peak_analysis(const Spectrum2D& sp, const PeakOptions& options = {});

/// Local maxima whose height and topographic prominence both reach prominence * max(y), with
/// sub-bin parabolic refinement.
std::vector<Peak> find_peaks(std::span<const double> x, std::span<const double> y, double prominence);

/// Diagonal slice total(w, w), bilinear where the grids differ.
Spectrum1D diagonal_slice(const Spectrum2D& sp);

struct PeakWidths {
    double diagonal = 0.0;
    double antidiagonal = 0.0;
};
/// Full widths at half maximum through (center, center) along w_exc = w_det and across it,
/// both measured in the w_exc coordinate.
PeakWidths peak_widths(const Spectrum2D& sp, double center);

double interpolate_2d(const Spectrum2D& sp, double w_exc, double w_det);

}  // namespace ptspec
