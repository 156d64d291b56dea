#include "xfdd/data.hpp"

namespace xfdd {
namespace {

VariableCatalog build_tep_variables() {
  struct Row {
    const char* description;
    const char* unit;
  };
  static const Row kMeas[] = {
      {"A feed (stream 1)", "kscmh"},
      {"D feed (stream 2)", "kg/h"},
      {"E feed (stream 3)", "kg/h"},
      {"A and C feed (stream 4)", "kscmh"},
      {"Recycle flow (stream 8)", "kscmh"},
      {"Reactor feed rate (stream 6)", "kscmh"},
      {"Reactor pressure", "kPa gauge"},
      {"Reactor level", "%"},
      {"Reactor temperature", "degC"},
      {"Purge rate (stream 9)", "kscmh"},
      {"Product separator temperature", "degC"},
      {"Product separator level", "%"},
      {"Product separator pressure", "kPa gauge"},
      {"Product separator underflow (stream 10)", "m3/h"},
      {"Stripper level", "%"},
      {"Stripper pressure", "kPa gauge"},
      {"Stripper underflow (stream 11)", "m3/h"},
      {"Stripper temperature", "degC"},
      {"Stripper steam flow", "kg/h"},
      {"Compressor work", "kW"},
      {"Reactor cooling water outlet temperature", "degC"},
      {"Separator cooling water outlet temperature", "degC"},
      {"Feed %A", "mol%"},
      {"Feed %B", "mol%"},
      {"Feed %C", "mol%"},
      {"Feed %D", "mol%"},
      {"Feed %E", "mol%"},
      {"Feed %F", "mol%"},
      {"Purge %A", "mol%"},
      {"Purge %B", "mol%"},
      {"Purge %C", "mol%"},
      {"Purge %D", "mol%"},
      {"Purge %E", "mol%"},
      {"Purge %F", "mol%"},
      {"Purge %G", "mol%"},
      {"Purge %H", "mol%"},
      {"Product %D", "mol%"},
      {"Product %E", "mol%"},
      {"Product %F", "mol%"},
      {"Product %G", "mol%"},
      {"Product %H", "mol%"},
  };
  static const Row kMv[] = {
      {"D feed flow", "kg/h"},
      {"E feed flow", "kg/h"},
      {"A feed flow", "kscmh"},
      {"A + C feed flow", "kscmh"},
      {"Compressor recycle valve", "%"},
      {"Purge valve", "%"},
      {"Separator pot liquid flow", "m3/h"},
      {"Stripper liquid product flow", "m3/h"},
      {"Stripper steam valve", "%"},
      {"Reactor cooling water flow", "m3/h"},
      {"Condenser cooling water flow", "m3/h"},
  };
  std::vector<VariableInfo> vars;
  int i = 1;
  for (const auto& r : kMeas) {
    vars.push_back({"XMEAS(" + std::to_string(i++) + ")", r.unit, r.description,
                    VariableKind::kMeasured});
  }
  i = 1;
  for (const auto& r : kMv) {
    vars.push_back({"XMV(" + std::to_string(i++) + ")", r.unit, r.description,
                    VariableKind::kManipulated});
  }
  return VariableCatalog(std::move(vars));
}

FaultCatalog build_tep_faults() {
  using T = FaultType;
  FaultCatalog c;
  auto add = [&](int id, const char* d, T t, bool excl = false) { c[id] = {id, d, t, excl}; };
  add(1, "A/C feed ratio, B composition constant (stream 4)", T::kStep);
  add(2, "B composition, A/C ratio constant (stream 4)", T::kStep);
  add(3, "D feed temperature", T::kStep, true);
  add(4, "Reactor cooling water inlet temperature", T::kStep);
  add(5, "Condenser cooling water inlet temperature (stream 2)", T::kStep);
  add(6, "A feed loss (stream 1)", T::kStep);
  add(7, "C header pressure loss, reduced availability (stream 4)", T::kStep);
  add(8, "A, B, C feed composition (stream 4)", T::kRandomVariation);
  add(9, "D feed temperature", T::kRandomVariation, true);
  add(10, "C feed temperature (stream 4)", T::kRandomVariation);
  add(11, "Reactor cooling water inlet temperature", T::kRandomVariation);
  add(12, "Condenser cooling water inlet temperature", T::kRandomVariation);
  add(13, "Reaction kinetics", T::kSlowDrift);
  add(14, "Reactor cooling water valve", T::kStiction);
  add(15, "Condenser cooling water valve", T::kStiction, true);
  add(16, "Deviations of heat transfer within stripper", T::kRandomVariation);
  add(17, "Deviations of heat transfer within reactor", T::kRandomVariation);
  add(18, "Deviations of heat transfer within condenser", T::kRandomVariation);
  add(19, "Recycle valve of compressor, underflow stripper and steam valve stripper",
      T::kStiction);
  add(20, "Unknown", T::kRandomVariation);
  return c;
}

}  // namespace

const VariableCatalog& tep_variable_catalog() {
  static const VariableCatalog catalog = build_tep_variables();
  return catalog;
}

const FaultCatalog& tep_fault_catalog() {
  static const FaultCatalog catalog = build_tep_faults();
  return catalog;
}

std::string to_string(FaultType type) {
  switch (type) {
    case FaultType::kStep: return "step";
    case FaultType::kRandomVariation: return "random_variation";
    case FaultType::kSlowDrift: return "slow_drift";
    case FaultType::kStiction: return "stiction";
    case FaultType::kUnknown: return "unknown";
  }
  return "unknown";
}

}  // namespace xfdd
