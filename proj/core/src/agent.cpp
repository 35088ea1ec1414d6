#include "remedy/agent.hpp"

#include <algorithm>

#include "remedy/error.hpp"
#include "remedy/feedback.hpp"
#include "remedy/kernel.hpp"

namespace remedy {

namespace {

constexpr double kSloP99Ms = 100.0;
constexpr double kSloErrorRate = 0.001;
constexpr unsigned kMaxRetries = 3;

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

bool degraded(const Metrics& m) { return m.p99_ms > kSloP99Ms || m.error_rate > kSloErrorRate; }

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string("misbehavior.") + name + " must be in [0, 1]");
}

}  // namespace

std::string_view to_string(Policy policy) noexcept {
  switch (policy) {
    case Policy::RawTools: return "raw_tools";
    case Policy::IsaOnly: return "isa_only";
    case Policy::IsaCritic: return "isa_critic";
  }
  return "unknown";
}

Policy parse_policy(std::string_view text) {
  for (auto p : {Policy::RawTools, Policy::IsaOnly, Policy::IsaCritic}) {
    if (to_string(p) == text) return p;
  }
  throw ConfigError("unknown policy \"" + std::string(text) + "\" (expected raw_tools, isa_only or isa_critic)");
}

void PolicyConfig::validate() const {
  check_probability(misbehavior.p_out_of_scope, "p_out_of_scope");
  check_probability(misbehavior.p_skip_drain, "p_skip_drain");
  check_probability(misbehavior.p_wrong_target, "p_wrong_target");
  if (delays.diagnosis_ms < 0 || delays.planning_ms < 0 || delays.verification_ms < 0) {
    throw ConfigError("agent delays must be >= 0");
  }
}

nlohmann::json PolicyConfig::to_json() const {
  return {{"policy", to_string(policy)},
          {"seed", seed},
          {"misbehavior",
           {{"p_out_of_scope", misbehavior.p_out_of_scope},
            {"p_skip_drain", misbehavior.p_skip_drain},
            {"p_wrong_target", misbehavior.p_wrong_target}}},
          {"delays",
           {{"diagnosis_ms", delays.diagnosis_ms},
            {"planning_ms", delays.planning_ms},
            {"verification_ms", delays.verification_ms}}}};
}

PolicyConfig PolicyConfig::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("policy config must be a JSON object");
  PolicyConfig c;
  try {
    if (auto it = doc.find("policy"); it != doc.end()) c.policy = parse_policy(it->get<std::string>());
    c.seed = doc.value("seed", c.seed);
    if (auto it = doc.find("misbehavior"); it != doc.end()) {
      c.misbehavior.p_out_of_scope = it->value("p_out_of_scope", c.misbehavior.p_out_of_scope);
      c.misbehavior.p_skip_drain = it->value("p_skip_drain", c.misbehavior.p_skip_drain);
      c.misbehavior.p_wrong_target = it->value("p_wrong_target", c.misbehavior.p_wrong_target);
    }
    if (auto it = doc.find("delays"); it != doc.end()) {
      c.delays.diagnosis_ms = it->value("diagnosis_ms", c.delays.diagnosis_ms);
      c.delays.planning_ms = it->value("planning_ms", c.delays.planning_ms);
      c.delays.verification_ms = it->value("verification_ms", c.delays.verification_ms);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("policy config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------

Diagnosis diagnose(const SimCluster& sim, const RecoveryGroup& group) {
  const auto metrics = sim.current_all();
  Diagnosis d{group.symptom_service, std::nullopt};
  bool found = false;
  for (const auto& batch : group.batches) {
    for (const auto& ref : batch) {
      if (auto it = metrics.find(ref); it != metrics.end() && degraded(it->second)) {
        d.suspect = ref;
        found = true;
        break;
      }
    }
    if (found) break;
  }
  if (auto it = metrics.find(d.suspect); it != metrics.end()) {
    const auto& m = it->second;
    if (m.error_rate >= 0.99) {
      d.suspected_kind = FaultKind::PodFailure;
    } else if (m.p99_ms > kSloP99Ms && m.error_rate > 0.005) {
      d.suspected_kind = FaultKind::CpuStress;
    } else if (m.p99_ms > kSloP99Ms) {
      d.suspected_kind = FaultKind::IoDelay;
    }
  }
  return d;
}

namespace {

std::vector<ServiceRef> by_fan_in(const CallGraph& graph, std::vector<ServiceRef> candidates) {
  std::stable_sort(candidates.begin(), candidates.end(), [&](const ServiceRef& a, const ServiceRef& b) {
    return graph.fan_in(graph.require(a)) > graph.fan_in(graph.require(b));
  });
  return candidates;
}

void rebuild_guards(RemediationTransaction& txn) {
  txn.conflict_keys.clear();
  txn.preconditions.clear();
  std::set<ServiceRef> targets;
  for (const auto& a : txn.actions) {
    if (targets.insert(a.target()).second) {
      txn.conflict_keys.insert(ConflictKey::of_service(a.target()));
      txn.preconditions.push_back(ServiceExists{a.target()});
    }
  }
}

bool is_kind_on(const Action& a, ActionKind kind, const ServiceRef& target) {
  return a.kind() == kind && a.target() == target;
}

}  // namespace

RemediationTransaction plan_remediation(const Diagnosis& diagnosis, const RecoveryGroup& group,
                                        const CallGraph& graph, const Slips& slips, std::mt19937_64& rng,
                                        std::string txn_id) {
  ServiceRef target = diagnosis.suspect;
  if (slips.wrong_target) {
    if (target != group.symptom_service) {
      target = group.symptom_service;
    } else {
      std::vector<ServiceRef> others;
      for (const auto& r : group.restart_set) {
        if (r != target) others.push_back(r);
      }
      if (!others.empty()) target = by_fan_in(graph, others).front();
    }
  }

  RemediationTransaction txn;
  txn.txn_id = std::move(txn_id);
  txn.failure_policy = FailurePolicy::RollbackAll;
  const bool drain = group.in_drain_set(target) && !slips.skip_drain;
  if (drain) txn.actions.push_back(actions::drain(target));
  if (diagnosis.suspected_kind == FaultKind::CpuStress || diagnosis.suspected_kind == FaultKind::MemoryStress) {
    txn.actions.push_back(actions::scale(target, 1));
  }
  txn.actions.push_back(actions::restart(target, 5'000));
  if (drain) txn.actions.push_back(actions::restore_traffic(target));

  if (slips.out_of_scope) {
    std::vector<ServiceRef> outside;
    for (const auto& s : graph.services()) {
      if (!group.in_scope(s)) outside.push_back(s);
    }
    if (!outside.empty()) {
      outside = by_fan_in(graph, std::move(outside));
      const std::size_t pool = std::min<std::size_t>(3, outside.size());
      txn.actions.push_back(actions::restart(outside[rng() % pool], 5'000));
    }
  }
  rebuild_guards(txn);
  return txn;
}

std::optional<std::string> verify_plan(const RemediationTransaction& txn, const RecoveryGroup& group) {
  for (const auto& a : txn.actions) {
    if (!group.in_scope(a.target())) return "target " + a.target().str() + " is outside the recovery group";
  }
  for (std::size_t i = 0; i < txn.actions.size(); ++i) {
    const auto& a = txn.actions[i];
    if (a.kind() != ActionKind::Restart || !group.in_drain_set(a.target())) continue;
    const auto first = txn.actions.begin();
    const bool drained_before =
        std::any_of(first, first + static_cast<std::ptrdiff_t>(i),
                    [&](const Action& b) { return is_kind_on(b, ActionKind::Drain, a.target()); });
    const bool restored_after =
        std::any_of(first + static_cast<std::ptrdiff_t>(i) + 1, txn.actions.end(),
                    [&](const Action& b) { return is_kind_on(b, ActionKind::RestoreTraffic, a.target()); });
    if (!drained_before || !restored_after) {
      return "restart of drain_set member " + a.target().str() + " without drain and restore_traffic around it";
    }
  }
  return std::nullopt;
}

std::optional<RemediationTransaction> repair_plan(const RemediationTransaction& txn, const RecoveryGroup& group,
                                                  std::string_view feedback, std::string txn_id) {
  RemediationTransaction out = txn;
  out.txn_id = std::move(txn_id);
  auto erase_if = [&](auto pred) {
    out.actions.erase(std::remove_if(out.actions.begin(), out.actions.end(), pred), out.actions.end());
  };

  if (auto fb = RejectionFeedback::parse(feedback)) {
    switch (fb->code) {
      case RejectCode::OutOfScope: {
        const std::string name = fb->detail.starts_with("svc/") ? fb->detail.substr(4) : fb->detail;
        erase_if([&](const Action& a) { return a.target().name == name && !group.in_scope(a.target()); });
        break;
      }
      case RejectCode::MissingCapability: {
        const auto colon = fb->detail.find(":svc/");
        if (colon == std::string::npos) return std::nullopt;
        const auto verb = fb->detail.substr(0, colon);
        const auto name = fb->detail.substr(colon + 5);
        erase_if([&](const Action& a) { return a.kind_name() == verb && a.target().name == name; });
        break;
      }
      default:
        return std::nullopt;
    }
  } else {
    // Verifier rationale: drop out-of-group targets, shield drain_set restarts.
    erase_if([&](const Action& a) { return !group.in_scope(a.target()); });
    std::vector<Action> shielded;
    for (std::size_t i = 0; i < out.actions.size(); ++i) {
      const auto& a = out.actions[i];
      const bool needs = a.kind() == ActionKind::Restart && group.in_drain_set(a.target());
      const bool has_drain = std::any_of(out.actions.begin(), out.actions.end(),
                                         [&](const Action& b) { return is_kind_on(b, ActionKind::Drain, a.target()); });
      if (needs && !has_drain) shielded.push_back(actions::drain(a.target()));
      shielded.push_back(a);
      const bool has_restore =
          std::any_of(out.actions.begin(), out.actions.end(),
                      [&](const Action& b) { return is_kind_on(b, ActionKind::RestoreTraffic, a.target()); });
      if (needs && !has_restore) shielded.push_back(actions::restore_traffic(a.target()));
    }
    out.actions = std::move(shielded);
  }
  if (out.actions.empty() || out.actions == txn.actions) return std::nullopt;
  rebuild_guards(out);
  return out;
}

// ---------------------------------------------------------------------------

nlohmann::json IncidentRecord::to_json() const {
  auto transcript_json = nlohmann::json::array();
  for (const auto& t : transcript) {
    nlohmann::json e = {{"proposal", t.proposal}, {"kernel_verdict", t.kernel_verdict}};
    if (!t.verifier_verdict.empty()) e["verifier_verdict"] = t.verifier_verdict;
    transcript_json.push_back(std::move(e));
  }
  auto harmed_json = nlohmann::json::array();
  for (const auto& s : harmed_services) harmed_json.push_back(s.str());
  auto txns = nlohmann::json::array();
  for (const auto& t : committed_txns) txns.push_back({{"txn_id", t.txn_id}, {"harmed", t.harmed}});
  nlohmann::json diag = {{"suspect", diagnosis.suspect.str()}};
  diag["suspected_kind"] = diagnosis.suspected_kind ? nlohmann::json(to_string(*diagnosis.suspected_kind))
                                                    : nlohmann::json(nullptr);
  return {{"scenario_id", scenario_id},
          {"fault", {{"kind", to_string(fault_kind)}, {"target", fault_target.str()}}},
          {"recovery_group", recovery_group.to_json()},
          {"diagnosis", std::move(diag)},
          {"misbehavior",
           {{"out_of_scope", slips.out_of_scope},
            {"skip_drain", slips.skip_drain},
            {"wrong_target", slips.wrong_target}}},
          {"transcript", std::move(transcript_json)},
          {"outcome", outcome},
          {"harmed", harmed},
          {"harmed_services", std::move(harmed_json)},
          {"committed_txns", std::move(txns)},
          {"recovered", recovered},
          {"ttr",
           {{"diagnosis_ms", ttr.diagnosis_ms},
            {"planning_ms", ttr.planning_ms},
            {"verification_ms", ttr.verification_ms},
            {"kernel_ms", ttr.kernel_ms},
            {"recovery_ms", ttr.recovery_ms},
            {"total_ms", ttr.total_ms()}}}};
}

namespace {

/// Earliest sample time from which every service stays within SLO.
std::optional<std::int64_t> restoration_time(const Telemetry& telemetry, std::int64_t from_ms) {
  std::optional<std::int64_t> since;
  if (telemetry.empty()) return std::nullopt;
  const auto& any = telemetry.begin()->second;
  for (std::size_t t = 0; t < any.size(); ++t) {
    if (any[t].t_ms < from_ms) continue;
    bool ok = true;
    for (const auto& [ref, series] : telemetry) {
      const auto& s = series[t];
      if (s.p99_ms > kSloP99Ms || s.error_rate > kSloErrorRate) {
        ok = false;
        break;
      }
    }
    if (!ok) {
      since.reset();
    } else if (!since) {
      since = any[t].t_ms;
    }
  }
  return since;
}

}  // namespace

IncidentRecord run_incident(const Scenario& scenario, const PolicyConfig& config, std::uint64_t incident_seed) {
  if (scenario.faults.empty()) throw ConfigError("scenario " + scenario.id + " injects no fault");
  config.validate();

  auto sim = scenario.instantiate(ClockMode::Virtual);
  const ServiceRef symptom = scenario.symptom.value_or(scenario.faults.front().target);

  IncidentRecord rec;
  rec.scenario_id = scenario.id;
  rec.fault_kind = scenario.faults.front().kind;
  rec.fault_target = scenario.faults.front().target;
  rec.recovery_group = infer_recovery_group(scenario.topology, Symptom{symptom});
  const auto& group = rec.recovery_group;

  std::mt19937_64 rng(incident_seed);
  rec.slips.out_of_scope = unit(rng) < config.misbehavior.p_out_of_scope;
  rec.slips.skip_drain = unit(rng) < config.misbehavior.p_skip_drain;
  rec.slips.wrong_target = unit(rng) < config.misbehavior.p_wrong_target;

  rec.diagnosis = diagnose(*sim, group);
  rec.ttr.diagnosis_ms = config.delays.diagnosis_ms;
  rec.ttr.planning_ms = config.delays.planning_ms;

  const std::string base_id = scenario.id + "/" + std::string(to_string(config.policy));
  const std::int64_t action_start = sim->now_ms();
  std::vector<std::pair<std::string, std::int64_t>> committed;

  auto proposal = plan_remediation(rec.diagnosis, group, scenario.topology, rec.slips, rng, base_id + "/p0");

  if (config.policy == Policy::RawTools) {
    rec.transcript.push_back({to_json(proposal), "BYPASS", ""});
    for (std::size_t k = 0; k < proposal.actions.size(); ++k) {
      sim->apply(proposal.actions[k], base_id + "/raw" + std::to_string(k));
    }
    rec.outcome = "executed";
  } else {
    MemoryJournal journal;
    Kernel::Options options;
    SimCluster* s = sim.get();
    options.now = [s] { return KernelClock::time_point(std::chrono::milliseconds(s->now_ms())); };
    options.sleep = [s](std::chrono::milliseconds d) { s->advance(d.count()); };
    Kernel kernel(*sim, journal, std::move(options));

    for (unsigned attempt = 0; attempt <= kMaxRetries; ++attempt) {
      TranscriptEntry entry{to_json(proposal), "", ""};
      std::optional<std::string> repair_hint;
      const auto verdict = kernel.check(proposal, group);
      if (!verdict.accepted()) {
        entry.kernel_verdict = verdict.rejection->render();
        repair_hint = entry.kernel_verdict;
      } else {
        entry.kernel_verdict = "ACCEPT";
        if (config.policy == Policy::IsaCritic) {
          rec.ttr.verification_ms += config.delays.verification_ms;
          if (auto rationale = verify_plan(proposal, group)) {
            entry.verifier_verdict = "REJECT: " + *rationale;
            repair_hint = *rationale;
          } else {
            entry.verifier_verdict = "APPROVE";
          }
        }
      }
      if (!repair_hint) {
        const auto started = sim->now_ms();
        const auto result = kernel.submit(proposal, group);
        rec.ttr.kernel_ms += std::chrono::duration<double, std::milli>(result.timing.kernel()).count();
        if (result.outcome) {
          rec.outcome = std::string(to_string(*result.outcome));
          if (result.committed()) committed.emplace_back(proposal.txn_id, started);
          if (result.rejection) entry.kernel_verdict = result.rejection->render();
          rec.transcript.push_back(std::move(entry));
          break;
        }
        entry.kernel_verdict = result.rejection->render();
        repair_hint = entry.kernel_verdict;
      }
      rec.transcript.push_back(std::move(entry));
      if (attempt == kMaxRetries) break;
      auto repaired = repair_plan(proposal, group, *repair_hint, base_id + "/p" + std::to_string(attempt + 1));
      if (!repaired) break;
      proposal = std::move(*repaired);
      rec.ttr.planning_ms += config.delays.planning_ms;
    }
    if (rec.outcome.empty()) rec.outcome = "abandoned";
  }

  sim->advance(scenario.observe_ms);
  const auto log = sim->action_log();
  for (const auto& e : log) rec.issued_tokens.push_back(e.token);
  const auto telemetry = sim->telemetry();
  if (!log.empty()) {
    const auto verdicts = evaluate_harm(telemetry, action_start);
    for (const auto& [ref, v] : verdicts) {
      if (v.harmed) rec.harmed_services.push_back(ref);
    }
    rec.harmed = !rec.harmed_services.empty();
  }
  for (const auto& [id, started] : committed) {
    rec.committed_txns.push_back({id, any_harm(evaluate_harm(telemetry, started))});
  }
  if (auto restored = restoration_time(telemetry, action_start)) {
    rec.recovered = true;
    rec.ttr.recovery_ms = *restored - action_start;
  } else {
    rec.ttr.recovery_ms = sim->now_ms() - action_start;
  }
  return rec;
}

}  // namespace remedy
