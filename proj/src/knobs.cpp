#include "causal_testbed/knobs.hpp"

#include <array>
#include <sstream>
#include <vector>

#include "causal_testbed/error.hpp"

namespace ctb {

namespace {

using TM = TreatmentModel;
using TP = TreatmentPct;
using OV = Overlap;
using RM = ResponseModel;
using AL = Alignment;
using HE = Heterogeneity;

// Settings 1-20 are the twenty do-it-yourself settings.
const std::array<Knobs, kCanonicalSettings> kTable = {{
    {TM::linear, TP::low, OV::penalize, RM::linear, AL::high, HE::high},  // 1
    {TM::polynomial, TP::low, OV::penalize, RM::exponential, AL::high, HE::none},  // 2
    {TM::linear, TP::low, OV::penalize, RM::linear, AL::high, HE::none},  // 3
    {TM::polynomial, TP::low, OV::full, RM::exponential, AL::high, HE::high},  // 4
    {TM::linear, TP::low, OV::penalize, RM::exponential, AL::high, HE::high},  // 5
    {TM::polynomial, TP::low, OV::penalize, RM::linear, AL::high, HE::high},  // 6
    {TM::polynomial, TP::low, OV::penalize, RM::exponential, AL::high, HE::high},  // 7
    {TM::polynomial, TP::low, OV::penalize, RM::exponential, AL::none, HE::high},  // 8
    {TM::step, TP::low, OV::penalize, RM::step, AL::high, HE::high},  // 9
    {TM::linear, TP::low, OV::penalize, RM::exponential, AL::low, HE::high},  // 10
    {TM::polynomial, TP::low, OV::penalize, RM::linear, AL::low, HE::high},  // 11
    {TM::polynomial, TP::low, OV::penalize, RM::exponential, AL::low, HE::high},  // 12
    {TM::linear, TP::high, OV::penalize, RM::exponential, AL::high, HE::high},  // 13
    {TM::polynomial, TP::high, OV::penalize, RM::linear, AL::high, HE::high},  // 14
    {TM::polynomial, TP::high, OV::penalize, RM::exponential, AL::high, HE::high},  // 15
    {TM::polynomial, TP::high, OV::penalize, RM::exponential, AL::none, HE::high},  // 16
    {TM::step, TP::high, OV::penalize, RM::step, AL::high, HE::high},  // 17
    {TM::linear, TP::high, OV::penalize, RM::exponential, AL::low, HE::high},  // 18
    {TM::polynomial, TP::high, OV::penalize, RM::linear, AL::low, HE::high},  // 19
    {TM::polynomial, TP::high, OV::penalize, RM::exponential, AL::low, HE::high},  // 20
    {TM::polynomial, TP::low, OV::penalize, RM::step, AL::low, HE::low},  // 21
    {TM::polynomial, TP::low, OV::penalize, RM::step, AL::low, HE::high},  // 22
    {TM::polynomial, TP::low, OV::penalize, RM::step, AL::high, HE::low},  // 23
    {TM::polynomial, TP::low, OV::penalize, RM::step, AL::high, HE::high},  // 24
    {TM::polynomial, TP::low, OV::penalize, RM::exponential, AL::low, HE::low},  // 25
    {TM::polynomial, TP::low, OV::penalize, RM::exponential, AL::high, HE::low},  // 26
    {TM::polynomial, TP::low, OV::full, RM::step, AL::low, HE::low},  // 27
    {TM::polynomial, TP::low, OV::full, RM::step, AL::low, HE::high},  // 28
    {TM::polynomial, TP::low, OV::full, RM::step, AL::high, HE::low},  // 29
    {TM::polynomial, TP::low, OV::full, RM::step, AL::high, HE::high},  // 30
    {TM::polynomial, TP::low, OV::full, RM::exponential, AL::low, HE::low},  // 31
    {TM::polynomial, TP::low, OV::full, RM::exponential, AL::low, HE::high},  // 32
    {TM::polynomial, TP::low, OV::full, RM::exponential, AL::high, HE::low},  // 33
    {TM::polynomial, TP::high, OV::penalize, RM::step, AL::low, HE::low},  // 34
    {TM::polynomial, TP::high, OV::penalize, RM::step, AL::low, HE::high},  // 35
    {TM::polynomial, TP::high, OV::penalize, RM::step, AL::high, HE::low},  // 36
    {TM::polynomial, TP::high, OV::penalize, RM::step, AL::high, HE::high},  // 37
    {TM::polynomial, TP::high, OV::penalize, RM::exponential, AL::low, HE::low},  // 38
    {TM::polynomial, TP::high, OV::penalize, RM::exponential, AL::high, HE::low},  // 39
    {TM::polynomial, TP::high, OV::full, RM::step, AL::low, HE::low},  // 40
    {TM::polynomial, TP::high, OV::full, RM::step, AL::low, HE::high},  // 41
    {TM::polynomial, TP::high, OV::full, RM::step, AL::high, HE::low},  // 42
    {TM::polynomial, TP::high, OV::full, RM::step, AL::high, HE::high},  // 43
    {TM::polynomial, TP::high, OV::full, RM::exponential, AL::low, HE::low},  // 44
    {TM::polynomial, TP::high, OV::full, RM::exponential, AL::low, HE::high},  // 45
    {TM::polynomial, TP::high, OV::full, RM::exponential, AL::high, HE::low},  // 46
    {TM::polynomial, TP::high, OV::full, RM::exponential, AL::high, HE::high},  // 47
    {TM::step, TP::low, OV::penalize, RM::step, AL::low, HE::low},  // 48
    {TM::step, TP::low, OV::penalize, RM::step, AL::low, HE::high},  // 49
    {TM::step, TP::low, OV::penalize, RM::step, AL::high, HE::low},  // 50
    {TM::step, TP::low, OV::penalize, RM::exponential, AL::low, HE::low},  // 51
    {TM::step, TP::low, OV::penalize, RM::exponential, AL::low, HE::high},  // 52
    {TM::step, TP::low, OV::penalize, RM::exponential, AL::high, HE::low},  // 53
    {TM::step, TP::low, OV::penalize, RM::exponential, AL::high, HE::high},  // 54
    {TM::step, TP::low, OV::full, RM::step, AL::low, HE::low},  // 55
    {TM::step, TP::low, OV::full, RM::step, AL::low, HE::high},  // 56
    {TM::step, TP::low, OV::full, RM::step, AL::high, HE::low},  // 57
    {TM::step, TP::low, OV::full, RM::step, AL::high, HE::high},  // 58
    {TM::step, TP::low, OV::full, RM::exponential, AL::low, HE::low},  // 59
    {TM::step, TP::low, OV::full, RM::exponential, AL::low, HE::high},  // 60
    {TM::step, TP::low, OV::full, RM::exponential, AL::high, HE::low},  // 61
    {TM::step, TP::low, OV::full, RM::exponential, AL::high, HE::high},  // 62
    {TM::step, TP::high, OV::penalize, RM::step, AL::low, HE::low},  // 63
    {TM::step, TP::high, OV::penalize, RM::step, AL::low, HE::high},  // 64
    {TM::step, TP::high, OV::penalize, RM::step, AL::high, HE::low},  // 65
    {TM::step, TP::high, OV::penalize, RM::exponential, AL::low, HE::low},  // 66
    {TM::step, TP::high, OV::penalize, RM::exponential, AL::low, HE::high},  // 67
    {TM::step, TP::high, OV::penalize, RM::exponential, AL::high, HE::low},  // 68
    {TM::step, TP::high, OV::penalize, RM::exponential, AL::high, HE::high},  // 69
    {TM::step, TP::high, OV::full, RM::step, AL::low, HE::low},  // 70
    {TM::step, TP::high, OV::full, RM::step, AL::low, HE::high},  // 71
    {TM::step, TP::high, OV::full, RM::step, AL::high, HE::low},  // 72
    {TM::step, TP::high, OV::full, RM::step, AL::high, HE::high},  // 73
    {TM::step, TP::high, OV::full, RM::exponential, AL::low, HE::low},  // 74
    {TM::step, TP::high, OV::full, RM::exponential, AL::low, HE::high},  // 75
    {TM::step, TP::high, OV::full, RM::exponential, AL::high, HE::low},  // 76
    {TM::step, TP::high, OV::full, RM::exponential, AL::high, HE::high},  // 77
}};

template <typename E, std::size_t N>
E parse_enum(const std::string& s, const std::array<E, N>& values, const char* what) {
  for (E v : values)
    if (to_string(v) == s) return v;
  throw Error(std::string("unknown ") + what + " '" + s + "'");
}

}  // namespace

double Knobs::target_treated_fraction() const {
  return treatment_pct == TreatmentPct::low ? 0.35 : 0.65;
}

double Knobs::alignment_probability() const {
  switch (alignment) {
    case Alignment::none: return 0.0;
    case Alignment::low: return 0.25;
    case Alignment::high: return 0.75;
  }
  return 0.0;
}

Knobs canonical_setting(int index) {
  if (index < 1 || index > kCanonicalSettings)
    throw Error("setting out of range 1..77 (got " + std::to_string(index) + ")");
  return kTable[static_cast<std::size_t>(index - 1)];
}

std::string to_string(TreatmentModel v) {
  switch (v) {
    case TM::linear: return "linear";
    case TM::polynomial: return "polynomial";
    case TM::step: return "step";
  }
  return {};
}

std::string to_string(TreatmentPct v) { return v == TP::low ? "low" : "high"; }

std::string to_string(Overlap v) { return v == OV::full ? "full" : "penalize"; }

std::string to_string(ResponseModel v) {
  switch (v) {
    case RM::linear: return "linear";
    case RM::exponential: return "exponential";
    case RM::step: return "step";
  }
  return {};
}

std::string to_string(Alignment v) {
  switch (v) {
    case AL::none: return "none";
    case AL::low: return "low";
    case AL::high: return "high";
  }
  return {};
}

std::string to_string(Heterogeneity v) {
  switch (v) {
    case HE::none: return "none";
    case HE::low: return "low";
    case HE::high: return "high";
  }
  return {};
}

std::string to_string(const Knobs& k) {
  return to_string(k.treatment_model) + "/" + to_string(k.treatment_pct) + "/" +
         to_string(k.overlap) + "/" + to_string(k.response_model) + "/" +
         to_string(k.alignment) + "/" + to_string(k.heterogeneity);
}

Knobs knobs_from_string(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, '/')) parts.push_back(item);
  if (parts.size() != 6) throw Error("knob tuple needs 6 '/'-separated fields: '" + s + "'");
  Knobs k;
  k.treatment_model = parse_enum(parts[0], std::array{TM::linear, TM::polynomial, TM::step}, "treatment model");
  k.treatment_pct = parse_enum(parts[1], std::array{TP::low, TP::high}, "treated percentage");
  k.overlap = parse_enum(parts[2], std::array{OV::full, OV::penalize}, "overlap");
  k.response_model = parse_enum(parts[3], std::array{RM::linear, RM::exponential, RM::step}, "response model");
  k.alignment = parse_enum(parts[4], std::array{AL::none, AL::low, AL::high}, "alignment");
  k.heterogeneity = parse_enum(parts[5], std::array{HE::none, HE::low, HE::high}, "heterogeneity");
  return k;
}

std::array<int, 6> knob_codes(const Knobs& k) {
  auto response = [](RM r) {
    switch (r) {
      case RM::linear: return 0;
      case RM::exponential: return 1;
      case RM::step: return 2;
    }
    return 0;
  };
  return {static_cast<int>(k.treatment_model),
          static_cast<int>(k.treatment_pct),
          k.overlap == OV::full ? 1 : 0,
          response(k.response_model),
          static_cast<int>(k.alignment),
          static_cast<int>(k.heterogeneity)};
}

void to_json(nlohmann::json& j, const Knobs& k) {
  j = nlohmann::json{{"treatment_model", to_string(k.treatment_model)},
                     {"treatment_pct", to_string(k.treatment_pct)},
                     {"overlap", to_string(k.overlap)},
                     {"response_model", to_string(k.response_model)},
                     {"alignment", to_string(k.alignment)},
                     {"heterogeneity", to_string(k.heterogeneity)}};
}

void from_json(const nlohmann::json& j, Knobs& k) {
  k = knobs_from_string(j.at("treatment_model").get<std::string>() + "/" +
                        j.at("treatment_pct").get<std::string>() + "/" +
                        j.at("overlap").get<std::string>() + "/" +
                        j.at("response_model").get<std::string>() + "/" +
                        j.at("alignment").get<std::string>() + "/" +
                        j.at("heterogeneity").get<std::string>());
}

}  // namespace ctb
