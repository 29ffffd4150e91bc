#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tierbench/classify.hpp"
#include "tierbench/ingest.hpp"

namespace tierbench {

// Model confidence is the top probability (or the explicit confidence when a
// record has no distribution); human confidence maps Likert 1..5 to (x - 1) / 4.
double confidence_of(const Prediction& pred);
double confidence_of(const PredictionRecord& record);
double confidence_of(const RaterRecord& rating);
double likert_to_confidence(int likert);

struct CalibrationBin {
  double low = 0.0;
  double high = 0.0;
  std::size_t count = 0;
  double mean_conf = 0.0;
  double accuracy = 0.0;
};

struct EceResult {
  double ece = 0.0;
  std::vector<CalibrationBin> bins;
};

// Equal-width bins with right-inclusive upper edges: [0, 1/n], (1/n, 2/n], ...
EceResult ece(std::span<const double> confidences, std::span<const bool> correct, std::size_t n_bins = 10);
std::size_t bin_index(double confidence, std::size_t n_bins);

// Multiclass Brier: mean over items of the squared distance to the one-hot truth.
double brier(std::span<const LabelDistribution> distributions, std::span<const Tier> truths);

// Decomposition over max-probability bins. `reliability` is the generalized term
// (binned reliability plus within-bin variance minus twice the within-bin
// covariance), which makes brier = reliability - resolution + uncertainty exact.
struct BrierDecomposition {
  double reliability = 0.0;
  double resolution = 0.0;
  double uncertainty = 0.0;
  double binned_reliability = 0.0;
  double within_bin_variance = 0.0;
  double within_bin_covariance = 0.0;  // already doubled
};

BrierDecomposition brier_decomposition(std::span<const LabelDistribution> distributions, std::span<const Tier> truths,
                                       std::size_t n_bins = 10);

struct ConfidenceGap {
  double gap = 0.0;
  double p_one_sided = 1.0;
  std::size_t n_correct = 0;
  std::size_t n_incorrect = 0;
};

// Throws DegenerateSplit when either group is empty.
ConfidenceGap confidence_gap(std::span<const double> confidences, std::span<const bool> correct);

struct SelectivePoint {
  double coverage = 0.0;
  double accuracy = 0.0;
};

struct SelectiveCurve {
  std::vector<SelectivePoint> points;
  std::vector<std::string> order;
};

// Descending confidence; ties by id ascending. Empty ids use the item index.
SelectiveCurve selective_curve(std::span<const double> confidences, std::span<const bool> correct,
                               std::span<const std::string> ids = {});

struct CalibrationReport {
  std::size_t n = 0;
  std::size_t n_bins = 10;
  double ece = 0.0;
  std::optional<double> brier;
  std::optional<BrierDecomposition> brier_decomposition;
  std::optional<double> confidence_gap;
  std::optional<double> gap_p_one_sided;
  std::vector<CalibrationBin> bins;
  std::vector<std::string> notes;
};

// distributions may be empty (human ratings); Brier is then omitted.
CalibrationReport calibration_report(std::span<const double> confidences, std::span<const bool> correct,
                                     std::span<const LabelDistribution> distributions, std::span<const Tier> truths,
                                     std::size_t n_bins = 10);

nlohmann::json to_json(const CalibrationReport& r);
nlohmann::json to_json(const SelectiveCurve& c);

}  // namespace tierbench
