// Copyright 2026 The asyncrx Authors
// SPDX-License-Identifier: Apache-2.0

#include "asyncrx/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>

#include "asyncrx/error.hpp"

namespace asyncrx {

std::string_view to_string(Scenario scenario) { return scenario == Scenario::kMimo ? "mimo" : "siso_isi"; }

Scenario parse_scenario(std::string_view name) {
  if (name == "mimo") return Scenario::kMimo;
  if (name == "siso_isi") return Scenario::kSisoIsi;
  throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

int ExperimentConfig::resolved_block_length() const {
  if (block_length > 0) return block_length;
  return fast ? 2000 : 10000;
}

int ExperimentConfig::resolved_pilots() const {
  if (pilots > 0) return pilots;
  if (scenario == Scenario::kSisoIsi) return fast ? 200 : 500;
  return fast ? 400 : 2000;
}

ChannelShape ExperimentConfig::channel_shape() const {
  return scenario == Scenario::kMimo ? ChannelShape::mimo(users, antennas) : ChannelShape::siso(taps);
}

ReceiverStructure ExperimentConfig::receiver_structure() const {
  ReceiverStructure s;
  const bool mimo = scenario == Scenario::kMimo;
  s.users = mimo ? users : 1;
  s.antennas = mimo ? antennas : 1;
  s.iterations = iterations;
  s.memory = taps;
  s.hidden = hidden;
  return s;
}

PolicySpec ExperimentConfig::policy_spec(std::string_view id) const {
  PolicySpec spec = parse_policy(id);
  spec.params.beta = beta;
  spec.params.delta = pht_delta;
  switch (spec.detector) {
    case DetectorKind::kDdm: spec.params.lambda = ddm_lambda; break;
    case DetectorKind::kPht: spec.params.lambda = pht_lambda; break;
    case DetectorKind::kPosterior: spec.params.lambda = posterior_lambda; break;
    case DetectorKind::kHotelling: spec.params.lambda = hotelling_lambda; break;
  }
  return spec;
}

TrainingOptions ExperimentConfig::training_options(int epoch_count, std::uint64_t seed) const {
  return TrainingOptions{epoch_count, learning_rate, batch_size, seed};
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad(std::string_view key, std::string_view value, std::string_view why) {
  throw ConfigError("config field '" + std::string(key) + "': " + std::string(why) + " (got '" + std::string(value) +
                    "')");
}

double to_double(std::string_view key, std::string_view value) {
  const std::string v = trim(value);
  if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
  if (v == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) bad(key, value, "expected a number");
    return d;
  } catch (const std::logic_error&) {
    bad(key, value, "expected a number");
  }
}

long to_long(std::string_view key, std::string_view value) {
  const std::string v = trim(value);
  try {
    std::size_t used = 0;
    const long n = std::stol(v, &used);
    if (used != v.size()) bad(key, value, "expected an integer");
    return n;
  } catch (const std::logic_error&) {
    bad(key, value, "expected an integer");
  }
}

int to_int(std::string_view key, std::string_view value) {
  const long n = to_long(key, value);
  if (n < std::numeric_limits<int>::min() || n > std::numeric_limits<int>::max()) bad(key, value, "out of range");
  return static_cast<int>(n);
}

bool to_bool(std::string_view key, std::string_view value) {
  const std::string v = trim(value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad(key, value, "expected true or false");
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in{std::string(value)};
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T, typename F>
std::vector<T> to_list(std::string_view value, F convert) {
  std::vector<T> out;
  for (const auto& item : split_list(value)) out.push_back(convert(item));
  return out;
}

std::string fmt_double(double d) {
  if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
  std::ostringstream out;
  out << std::setprecision(17) << d;
  return out.str();
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F format) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + format(items[i]);
  return out;
}

std::string base_name(BaseChannel b) { return b == BaseChannel::kIdentity ? "identity" : "exponential"; }

struct Field {
  const char* name;
  const char* help;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> table = {
      {"scenario", "mimo | siso_isi",
       [](C& c, std::string_view v) { c.scenario = parse_scenario(trim(v)); },
       [](const C& c) { return std::string(to_string(c.scenario)); }},
      {"profile", "single_user_bursty | multi_user_bursty | smooth_drift | static",
       [](C& c, std::string_view v) { c.profile.kind = parse_profile_kind(trim(v)); },
       [](const C& c) { return std::string(to_string(c.profile.kind)); }},
      {"change_blocks", "comma-separated 1-based blocks with abrupt jumps",
       [](C& c, std::string_view v) {
         c.profile.change_blocks = to_list<int>(v, [](const std::string& s) { return to_int("change_blocks", s); });
       },
       [](const C& c) { return join(c.profile.change_blocks, [](int i) { return std::to_string(i); }); }},
      {"jump_scale", "relative size of each abrupt jump, in [0, 2]",
       [](C& c, std::string_view v) { c.profile.jump_scale = to_double("jump_scale", v); },
       [](const C& c) { return fmt_double(c.profile.jump_scale); }},
      {"drift_rate", "max per-block smooth increment per channel entry",
       [](C& c, std::string_view v) { c.profile.drift_rate = to_double("drift_rate", v); },
       [](const C& c) { return fmt_double(c.profile.drift_rate); }},
      {"drift_period", "blocks per sinusoidal drift cycle",
       [](C& c, std::string_view v) { c.profile.drift_period = to_int("drift_period", v); },
       [](const C& c) { return std::to_string(c.profile.drift_period); }},
      {"affected_users", "comma-separated 1-based users that vary",
       [](C& c, std::string_view v) {
         c.profile.affected_users = to_list<int>(v, [](const std::string& s) { return to_int("affected_users", s); });
       },
       [](const C& c) { return join(c.profile.affected_users, [](int i) { return std::to_string(i); }); }},
      {"base_channel", "exponential | identity",
       [](C& c, std::string_view v) {
         const std::string s = trim(v);
         if (s == "exponential") c.base_channel = BaseChannel::kExponential;
         else if (s == "identity") c.base_channel = BaseChannel::kIdentity;
         else bad("base_channel", v, "expected exponential or identity");
       },
       [](const C& c) { return base_name(c.base_channel); }},
      {"users", "MIMO users K",
       [](C& c, std::string_view v) { c.users = to_int("users", v); },
       [](const C& c) { return std::to_string(c.users); }},
      {"antennas", "MIMO receive antennas N",
       [](C& c, std::string_view v) { c.antennas = to_int("antennas", v); },
       [](const C& c) { return std::to_string(c.antennas); }},
      {"taps", "SISO channel memory L",
       [](C& c, std::string_view v) { c.taps = to_int("taps", v); },
       [](const C& c) { return std::to_string(c.taps); }},
      {"blocks", "horizon T",
       [](C& c, std::string_view v) { c.blocks = to_int("blocks", v); },
       [](const C& c) { return std::to_string(c.blocks); }},
      {"fast", "desk-scale block sizes when block_length/pilots are 0",
       [](C& c, std::string_view v) { c.fast = to_bool("fast", v); },
       [](const C& c) { return std::string(c.fast ? "true" : "false"); }},
      {"block_length", "symbols per block B_tran (0 = scale default)",
       [](C& c, std::string_view v) { c.block_length = to_int("block_length", v); },
       [](const C& c) { return std::to_string(c.block_length); }},
      {"pilots", "pilots per block B_pilot (0 = scale default)",
       [](C& c, std::string_view v) { c.pilots = to_int("pilots", v); },
       [](const C& c) { return std::to_string(c.pilots); }},
      {"snr_db", "SNR for run/compare/calibrate",
       [](C& c, std::string_view v) { c.snr_db = to_double("snr_db", v); },
       [](const C& c) { return fmt_double(c.snr_db); }},
      {"snr_list", "comma-separated SNRs for sweep",
       [](C& c, std::string_view v) {
         c.snr_list = to_list<double>(v, [](const std::string& s) { return to_double("snr_list", s); });
       },
       [](const C& c) { return join(c.snr_list, fmt_double); }},
      {"receiver", "deepsic | fc | viterbinet",
       [](C& c, std::string_view v) { c.receiver = parse_receiver_kind(trim(v)); },
       [](const C& c) { return std::string(to_string(c.receiver)); }},
      {"iterations", "DeepSIC iterations Q",
       [](C& c, std::string_view v) { c.iterations = to_int("iterations", v); },
       [](const C& c) { return std::to_string(c.iterations); }},
      {"hidden", "hidden units per module",
       [](C& c, std::string_view v) { c.hidden = to_int("hidden", v); },
       [](const C& c) { return std::to_string(c.hidden); }},
      {"policy", "always | periodic:<k> | unstructured:<detector> | modular:<detector>",
       [](C& c, std::string_view v) {
         c.policy = trim(v);
         parse_policy(c.policy);
       },
       [](const C& c) { return c.policy; }},
      {"policies", "comma-separated policy ids for compare",
       [](C& c, std::string_view v) {
         c.policies = split_list(v);
         for (const auto& p : c.policies) parse_policy(p);
       },
       [](const C& c) { return join(c.policies, [](const std::string& s) { return s; }); }},
      {"ddm_lambda", "DDM confidence multiplier",
       [](C& c, std::string_view v) { c.ddm_lambda = to_double("ddm_lambda", v); },
       [](const C& c) { return fmt_double(c.ddm_lambda); }},
      {"pht_lambda", "PHT distance-jump threshold",
       [](C& c, std::string_view v) { c.pht_lambda = to_double("pht_lambda", v); },
       [](const C& c) { return fmt_double(c.pht_lambda); }},
      {"pht_delta", "PHT magnitude change factor",
       [](C& c, std::string_view v) { c.pht_delta = to_double("pht_delta", v); },
       [](const C& c) { return fmt_double(c.pht_delta); }},
      {"posterior_lambda", "posterior detector confidence floor",
       [](C& c, std::string_view v) { c.posterior_lambda = to_double("posterior_lambda", v); },
       [](const C& c) { return fmt_double(c.posterior_lambda); }},
      {"hotelling_lambda", "Hotelling statistic threshold",
       [](C& c, std::string_view v) { c.hotelling_lambda = to_double("hotelling_lambda", v); },
       [](const C& c) { return fmt_double(c.hotelling_lambda); }},
      {"beta", "forgetting factor shared by all detectors",
       [](C& c, std::string_view v) { c.beta = to_double("beta", v); },
       [](const C& c) { return fmt_double(c.beta); }},
      {"budget", "cap C on retrained modules over the horizon, or 'unlimited'",
       [](C& c, std::string_view v) {
         const std::string s = trim(v);
         c.budget = s == "unlimited" ? Budget::kUnlimited : to_long("budget", s);
       },
       [](const C& c) { return c.budget == Budget::kUnlimited ? std::string("unlimited") : std::to_string(c.budget); }},
      {"retrain_timing", "consecutive | same_block",
       [](C& c, std::string_view v) { c.retrain_timing = parse_retrain_timing(trim(v)); },
       [](const C& c) { return std::string(to_string(c.retrain_timing)); }},
      {"epochs", "SGD epochs per online retrain",
       [](C& c, std::string_view v) { c.epochs = to_int("epochs", v); },
       [](const C& c) { return std::to_string(c.epochs); }},
      {"bootstrap_epochs", "SGD epochs for the initial pre-horizon training",
       [](C& c, std::string_view v) { c.bootstrap_epochs = to_int("bootstrap_epochs", v); },
       [](const C& c) { return std::to_string(c.bootstrap_epochs); }},
      {"learning_rate", "SGD step size",
       [](C& c, std::string_view v) { c.learning_rate = to_double("learning_rate", v); },
       [](const C& c) { return fmt_double(c.learning_rate); }},
      {"batch_size", "SGD mini-batch size",
       [](C& c, std::string_view v) { c.batch_size = to_int("batch_size", v); },
       [](const C& c) { return std::to_string(c.batch_size); }},
      {"seeds", "comma-separated run seeds",
       [](C& c, std::string_view v) {
         c.seeds = to_list<std::uint64_t>(v, [](const std::string& s) {
           const long n = to_long("seeds", s);
           if (n < 0) bad("seeds", s, "seeds must be nonnegative");
           return static_cast<std::uint64_t>(n);
         });
       },
       [](const C& c) { return join(c.seeds, [](std::uint64_t s) { return std::to_string(s); }); }},
      {"output_dir", "directory for CSV outputs",
       [](C& c, std::string_view v) { c.output_dir = trim(v); },
       [](const C& c) { return c.output_dir; }},
      {"calibrate_target", "mean retrain events the calibrate command aims for",
       [](C& c, std::string_view v) { c.calibrate_target = to_double("calibrate_target", v); },
       [](const C& c) { return fmt_double(c.calibrate_target); }},
      {"calibrate_grid", "comma-separated thresholds to try (empty = default grid)",
       [](C& c, std::string_view v) {
         c.calibrate_grid = to_list<double>(v, [](const std::string& s) { return to_double("calibrate_grid", s); });
       },
       [](const C& c) { return join(c.calibrate_grid, fmt_double); }},
      {"verify_ledger", "diff receiver checkpoints around every retrain",
       [](C& c, std::string_view v) { c.verify_ledger = to_bool("verify_ledger", v); },
       [](const C& c) { return std::string(c.verify_ledger ? "true" : "false"); }},
      {"write_events", "write per-run detector event logs",
       [](C& c, std::string_view v) { c.write_events = to_bool("write_events", v); },
       [](const C& c) { return std::string(c.write_events ? "true" : "false"); }},
  };
  return table;
}

}  // namespace

void set_field(ExperimentConfig& config, std::string_view key, std::string_view value) {
  for (const auto& f : fields()) {
    if (key == f.name) {
      try {
        f.set(config, value);
      } catch (const ConfigError& e) {
        const std::string msg = e.what();
        if (msg.rfind("config field", 0) == 0) throw;
        throw ConfigError("config field '" + std::string(key) + "': " + msg);
      }
      return;
    }
  }
  throw ConfigError("unknown config field '" + std::string(key) + "'");
}

std::vector<std::pair<std::string, std::string>> config_fields() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(f.name, f.help);
  return out;
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
    set_field(base, trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
  }
  return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, std::move(base));
}

void validate(const ExperimentConfig& c) {
  auto fail = [](const char* field, const std::string& why) {
    throw ConfigError("config field '" + std::string(field) + "': " + why);
  };
  if (c.blocks < 1) fail("blocks", "must be >= 1");
  if (c.users < 1) fail("users", "must be >= 1");
  if (c.antennas < 1) fail("antennas", "must be >= 1");
  if (c.taps < 1) fail("taps", "must be >= 1");
  if (c.iterations < 1) fail("iterations", "must be >= 1");
  if (c.hidden < 1) fail("hidden", "must be >= 1");
  if (c.block_length < 0) fail("block_length", "must be >= 0");
  if (c.pilots < 0) fail("pilots", "must be >= 0");
  if (c.resolved_pilots() < 2) fail("pilots", "need at least two pilots per block");
  if (c.resolved_pilots() >= c.resolved_block_length())
    fail("pilots", "B_pilot (" + std::to_string(c.resolved_pilots()) + ") must be below B_tran (" +
                       std::to_string(c.resolved_block_length()) + ")");
  if (c.seeds.empty()) fail("seeds", "at least one seed is required");
  if (!std::isfinite(c.snr_db)) fail("snr_db", "must be finite");
  for (double s : c.snr_list)
    if (!std::isfinite(s)) fail("snr_list", "entries must be finite");
  if (c.epochs < 1) fail("epochs", "must be >= 1");
  if (c.bootstrap_epochs < 1) fail("bootstrap_epochs", "must be >= 1");
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) fail("learning_rate", "must be positive");
  if (c.batch_size < 1) fail("batch_size", "must be >= 1");
  if (!(c.beta >= 0.0 && c.beta <= 1.0)) fail("beta", "must lie in [0, 1]");
  if (!(c.pht_delta >= 0.0)) fail("pht_delta", "must be nonnegative");
  if (c.budget < 0) fail("budget", "must be nonnegative");
  for (int u : c.profile.affected_users)
    if (u < 1 || u > (c.scenario == Scenario::kMimo ? c.users : 1)) fail("affected_users", "user out of range");
  for (int b : c.profile.change_blocks)
    if (b < 1 || b > c.blocks) fail("change_blocks", "block " + std::to_string(b) + " outside [1, blocks]");
  if (!std::is_sorted(c.profile.change_blocks.begin(), c.profile.change_blocks.end()))
    fail("change_blocks", "must be sorted");
  if (c.profile.kind == ProfileKind::kSingleUserBursty && c.profile.affected_users.size() != 1)
    fail("affected_users", "single_user_bursty needs exactly one affected user");
  if (!(c.profile.jump_scale >= 0.0 && c.profile.jump_scale <= 2.0)) fail("jump_scale", "must lie in [0, 2]");
  if (!(c.profile.drift_rate >= 0.0)) fail("drift_rate", "must be nonnegative");
  if (c.profile.drift_period < 1) fail("drift_period", "must be >= 1");
  const bool mimo = c.scenario == Scenario::kMimo;
  if (mimo && c.receiver == ReceiverKind::kViterbiNet) fail("receiver", "viterbinet needs scenario = siso_isi");
  if (!mimo && c.receiver == ReceiverKind::kDeepSic && c.taps > 1)
    fail("receiver", "deepsic is memoryless; use viterbinet or fc for siso_isi with taps > 1");
  if (!mimo && c.receiver == ReceiverKind::kViterbiNet && c.resolved_pilots() < c.taps)
    fail("pilots", "ViterbiNet needs at least as many pilots as taps");
  if (mimo && c.base_channel == BaseChannel::kIdentity && c.users != c.antennas)
    fail("base_channel", "identity channel needs users == antennas");
  parse_policy(c.policy);
  for (const auto& p : c.policies) parse_policy(p);
}

std::string to_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.name) + " = " + f.get(config) + "\n";
  return out;
}

}  // namespace asyncrx
