#include "remedy/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "remedy/error.hpp"

namespace remedy {

std::uint64_t incident_seed(std::uint64_t seed, std::size_t index) noexcept {
  // splitmix64 over the pair.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

CampaignConfig CampaignConfig::from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("campaign config must be a JSON object");
  CampaignConfig c;
  c.policy = PolicyConfig::from_json(doc);
  try {
    c.parallelism = doc.value("parallelism", 0u);
    const bool has_suite = doc.contains("suite");
    const bool has_list = doc.contains("scenarios");
    if (has_suite == has_list) throw ConfigError("campaign config needs exactly one of \"suite\" or \"scenarios\"");
    if (has_suite) {
      const auto& s = doc.at("suite");
      const auto kind = s.value("kind", std::string("default"));
      const auto count = s.value("count", std::size_t{0});
      const auto suite_seed = s.value("seed", c.policy.seed);
      if (kind == "default") {
        c.scenarios = default_scenario_suite(suite_seed, count ? count : 50);
      } else if (kind == "fault") {
        c.scenarios = fault_kind_suite(parse_fault_kind(s.at("fault").get<std::string>()), suite_seed,
                                       count ? count : 20);
      } else {
        throw ConfigError("unknown suite kind \"" + kind + "\"");
      }
    } else {
      const auto& list = doc.at("scenarios");
      if (!list.is_array()) throw ConfigError("campaign scenarios must be an array");
      for (const auto& item : list) {
        if (item.is_string()) {
          std::filesystem::path p = item.get<std::string>();
          c.scenarios.push_back(Scenario::load(p.is_absolute() ? p : base_dir / p));
        } else {
          c.scenarios.push_back(Scenario::from_json(item));
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("campaign config: ") + e.what());
  } catch (const ParseError& e) {
    throw ConfigError(std::string("campaign config: ") + e.what());
  }
  if (c.scenarios.empty()) throw ConfigError("campaign has no scenarios");
  return c;
}

CampaignConfig CampaignConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open campaign file " + path.string());
  auto doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("campaign file " + path.string() + " is not valid JSON");
  return from_json(doc, path.parent_path());
}

CampaignReport run_campaign(const CampaignConfig& config) {
  if (config.scenarios.empty()) throw ConfigError("campaign has no scenarios");
  config.policy.validate();
  const std::size_t n = config.scenarios.size();
  std::vector<IncidentRecord> records(n);

  unsigned workers = config.parallelism ? config.parallelism : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        records[i] = run_incident(config.scenarios[i], config.policy, incident_seed(config.policy.seed, i));
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  CampaignReport r;
  r.policy = config.policy.policy;
  r.seed = config.policy.seed;
  r.incidents = n;
  std::vector<double> ttr;
  for (const auto& rec : records) {
    if (rec.harmed) ++r.harmed;
    if (rec.recovered) ++r.recovered;
    for (const auto& t : rec.committed_txns) {
      ++r.committed;
      if (t.harmed) ++r.harmful_commits;
    }
    ttr.push_back(rec.ttr.total_ms());
  }
  r.harm_rate = static_cast<double>(r.harmed) / static_cast<double>(n);
  r.harm_ci = clopper_pearson(r.harmed, n);
  r.ttr_ms = summarize(ttr);
  r.records = std::move(records);
  return r;
}

nlohmann::json CampaignReport::to_json() const {
  return {{"policy", to_string(policy)},
          {"seed", seed},
          {"incidents", incidents},
          {"harmed", harmed},
          {"harm_rate", harm_rate},
          {"harm_ci_95", {harm_ci.lower, harm_ci.upper}},
          {"committed_transactions", committed},
          {"harmful_commits", harmful_commits},
          {"recovered", recovered},
          {"ttr_ms", ttr_ms.to_json()}};
}

void write_incidents_jsonl(std::ostream& out, const CampaignReport& report) {
  for (const auto& rec : report.records) out << rec.to_json().dump() << '\n';
}

}  // namespace remedy
