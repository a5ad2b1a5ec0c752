#pragma once

#include <array>
#include <string>

#include <json.hpp>

namespace ctb {

enum class TreatmentModel { linear, polynomial, step };
enum class TreatmentPct { low, high };
enum class Overlap { full, penalize };
enum class ResponseModel { linear, exponential, step };
enum class Alignment { none, low, high };
enum class Heterogeneity { none, low, high };

/// One point of the simulation design.
struct Knobs {
  TreatmentModel treatment_model = TreatmentModel::linear;
  TreatmentPct treatment_pct = TreatmentPct::low;
  Overlap overlap = Overlap::full;
  ResponseModel response_model = ResponseModel::linear;
  Alignment alignment = Alignment::low;
  Heterogeneity heterogeneity = Heterogeneity::none;

  bool operator==(const Knobs&) const = default;

  /// Target expected treated fraction: 0.35 (low) or 0.65 (high).
  double target_treated_fraction() const;
  /// Probability that an assignment term is copied into the response.
  double alignment_probability() const;
};

inline constexpr int kCanonicalSettings = 77;

/// Canonical setting `index` in 1..77; throws outside that range.
Knobs canonical_setting(int index);

std::string to_string(TreatmentModel v);
std::string to_string(TreatmentPct v);
std::string to_string(Overlap v);
std::string to_string(ResponseModel v);
std::string to_string(Alignment v);
std::string to_string(Heterogeneity v);
/// "linear/low/penalize/linear/high/none" in column order of the settings table.
std::string to_string(const Knobs& k);
/// Inverse of to_string(const Knobs&).
Knobs knobs_from_string(const std::string& s);

/// 0/1/2 codes recorded as knob metrics (overlap: 1 = full, 0 = penalize).
std::array<int, 6> knob_codes(const Knobs& k);

void to_json(nlohmann::json& j, const Knobs& k);
void from_json(const nlohmann::json& j, Knobs& k);

}  // namespace ctb
