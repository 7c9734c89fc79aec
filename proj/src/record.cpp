#include "dime/record.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "dime/math_util.hpp"

namespace dime {

void write_path_records(std::ostream& out, const std::vector<SamplePathRecord>& records) {
  out.precision(17);
  for (const auto& rec : records) {
    out << "path seed=" << rec.seed << " steps=" << rec.entries.size()
        << " final_loglik=" << rec.final_log_likelihood << "\n";
    for (const auto& e : rec.entries) {
      out << "t=" << e.t << " hash=" << std::hex << e.state_hash << std::dec
          << " high=" << e.theta_high_prod << " low=" << e.theta_low_prod
          << " chi2=" << e.chi_squared << "\n";
    }
  }
}

std::vector<SamplePathRecord> read_path_records(std::istream& in) {
  std::vector<SamplePathRecord> records;
  std::string line;
  auto value_after = [](const std::string& text, const std::string& key) -> std::string {
    auto pos = text.find(key + "=");
    if (pos == std::string::npos) throw std::runtime_error("record: missing field " + key);
    pos += key.size() + 1;
    auto end = text.find(' ', pos);
    return text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("path ", 0) == 0) {
      SamplePathRecord rec;
      rec.seed = std::stoull(value_after(line, "seed"));
      rec.final_log_likelihood = std::stod(value_after(line, "final_loglik"));
      size_t steps = std::stoul(value_after(line, "steps"));
      rec.entries.reserve(steps);
      records.push_back(std::move(rec));
    } else {
      if (records.empty()) throw std::runtime_error("record: entry line before path header");
      PathEntry e;
      e.t = std::stod(value_after(line, "t"));
      e.state_hash = std::stoull(value_after(line, "hash"), nullptr, 16);
      e.theta_high_prod = std::stod(value_after(line, "high"));
      e.theta_low_prod = std::stod(value_after(line, "low"));
      e.chi_squared = std::stod(value_after(line, "chi2"));
      records.back().entries.push_back(std::move(e));
    }
  }
  return records;
}

nlohmann::json evidence_to_json(const EvidenceEstimate& e) {
  nlohmann::json j;
  j["method"] = e.method;
  j["estimate"] = e.point_estimate;
  j["per_path"] = e.per_path_values;
  if (e.per_trial_values) j["per_trial"] = *e.per_trial_values;
  j["std"] = e.dispersion;
  j["normalized"] = e.normalized;
  j["metadata"] = e.metadata.empty() ? nlohmann::json::object() : nlohmann::json::parse(e.metadata);
  return j;
}

EvidenceEstimate evidence_from_json(const nlohmann::json& j) {
  EvidenceEstimate e;
  e.method = j.at("method").get<std::string>();
  e.point_estimate = j.at("estimate").get<double>();
  e.per_path_values = j.at("per_path").get<std::vector<double>>();
  if (j.contains("per_trial")) e.per_trial_values = j["per_trial"].get<std::vector<double>>();
  e.dispersion = j.at("std").get<double>();
  e.normalized = j.at("normalized").get<bool>();
  e.metadata = j.value("metadata", nlohmann::json::object()).dump();
  return e;
}

EvidenceEstimate combine_trials(const std::vector<EvidenceEstimate>& trials) {
  if (trials.empty()) throw std::invalid_argument("combine_trials: no trials");
  EvidenceEstimate out;
  out.method = trials[0].method;
  out.normalized = trials[0].normalized;
  std::vector<double> per_trial;
  per_trial.reserve(trials.size());
  for (const auto& t : trials) {
    per_trial.push_back(t.point_estimate);
    out.per_path_values.insert(out.per_path_values.end(), t.per_path_values.begin(),
                               t.per_path_values.end());
  }
  out.point_estimate = mean(per_trial);
  out.dispersion = sample_stddev(per_trial);
  out.per_trial_values = std::move(per_trial);
  out.metadata = trials[0].metadata;
  return out;
}

}  // namespace dime
