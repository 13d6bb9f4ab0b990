#include "rvm/config.hpp"

#include <cmath>
#include <set>

namespace rvm {

namespace {

void check_keys(const Json& j, const std::string& where,
                const std::set<std::string>& allowed) {
  if (!j.is_object())
    throw ConfigError("config section '" + where + "' must be a JSON object");
  for (const auto& item : j.items())
    if (allowed.find(item.key()) == allowed.end())
      throw ConfigError("unknown config key: " +
                        (where.empty() ? item.key() : where + "." + item.key()));
}

template <typename T>
void get_to(const Json& j, const char* key, T& target, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(target);
  } catch (const Json::exception& e) {
    throw ConfigError("bad value for " + (where.empty() ? std::string(key) : where + "." + key) +
                      ": " + e.what());
  }
}

double json_to_double(const Json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string() && v.get<std::string>() == "nan")
    return std::numeric_limits<double>::quiet_NaN();
  throw ConfigError("bad numeric value for " + where);
}

Json double_to_json(double v) {
  if (std::isnan(v)) return Json("nan");
  return Json(v);
}

}  // namespace

GlobalSchedule RunConfig::schedule_object() const {
  GlobalSchedule s;
  s.regime = schedule_regime_from_string(schedule.regime);
  s.c = schedule.c;
  s.delta = schedule.delta;
  return s;
}

ChainConfig RunConfig::chain_object() const {
  ChainConfig c;
  c.n_iter = chain.n_iter;
  c.burn_in = chain.burn_in;
  c.thin = chain.thin;
  c.n_chains = chain.n_chains;
  c.seed = seed;
  if (chain.sweep == "collapsed")
    c.sweep = SweepKind::Collapsed;
  else if (chain.sweep == "full_conditional")
    c.sweep = SweepKind::FullConditional;
  else
    throw ConfigError("unknown chain.sweep: " + chain.sweep);
  c.validate();
  return c;
}

KernelSpec RunConfig::kernel_object(int p) const {
  KernelSpec spec;
  spec.family = kernel_family_from_string(kernel.family);
  spec.theta = kernel.theta;
  spec.scale_normalization =
      kernel.scale_p_theta ? std::pow(static_cast<double>(p), kernel.theta)
                           : kernel.scale;
  spec.validate();
  return spec;
}

GridSpec RunConfig::grid_object() const {
  GridSpec g;
  g.nodes_per_dim = oracle.nodes_per_dim;
  g.lambda_lo = oracle.lambda_lo;
  g.lambda_hi = oracle.lambda_hi;
  return g;
}

ExperimentConfig RunConfig::experiment_object() const {
  ExperimentConfig e;
  e.n_grid = bench.n_grid;
  e.gamma = truth.gamma;
  e.replicates = bench.replicates;
  e.root_seed = seed;
  e.design_kind = design_kind_from_string(design.kind);
  e.kernel.family = kernel_family_from_string(kernel.family);
  e.kernel.theta = kernel.theta;
  e.kernel.scale_normalization = 1.0;
  e.scale_by_p_theta = kernel.scale_p_theta;

  const std::string& pr = bench.p_rule;
  if (pr == "consistency") {
    e.p_rule.mode = PRuleMode::Consistency;
  } else if (pr.rfind("fixed:", 0) == 0) {
    e.p_rule.mode = PRuleMode::Fixed;
    e.p_rule.value = std::strtod(pr.c_str() + 6, nullptr);
  } else if (pr.rfind("times_n:", 0) == 0) {
    e.p_rule.mode = PRuleMode::TimesN;
    e.p_rule.value = std::strtod(pr.c_str() + 8, nullptr);
  } else {
    throw ConfigError("bench.p_rule must be fixed:<p>, times_n:<x> or consistency: " + pr);
  }
  if (e.p_rule.mode != PRuleMode::Consistency && !(e.p_rule.value > 0.0))
    throw ConfigError("bench.p_rule needs a positive value: " + pr);
  e.consistency_safety = bench.consistency_safety;

  e.prior = prior_object();
  e.a = hyper.a;
  e.b = hyper.b;
  e.schedule = schedule_object();
  e.chain = chain_object();
  if (bench.cert_rule == "unit")
    e.cert_rule = CertRule::UnitInterval;
  else if (bench.cert_rule == "p_theta")
    e.cert_rule = CertRule::PThetaInterval;
  else
    throw ConfigError("bench.cert_rule must be unit or p_theta: " + bench.cert_rule);
  e.support_rule = support_rule_from_string(truth.support_rule);
  e.value_rule = value_rule_from_string(truth.value_rule);
  e.M = truth.M;
  e.sigma0_sq = truth.sigma0_sq;
  e.validate();
  return e;
}

Json RunConfig::to_json() const {
  Json j;
  j["seed"] = seed;
  j["out"] = out;
  j["threads"] = threads;
  j["verbosity"] = verbosity;
  j["design"] = Json{{"kind", design.kind}, {"n", design.n},     {"p", design.p},
                     {"theta", design.theta}, {"csv", design.csv}};
  j["kernel"] = Json{{"family", kernel.family},
                     {"theta", kernel.theta},
                     {"scale", kernel.scale},
                     {"scale_p_theta", kernel.scale_p_theta}};
  j["prior"] = prior;
  j["hyper"] = Json{{"a", hyper.a}, {"b", hyper.b}};
  j["schedule"] = Json{{"regime", schedule.regime}, {"c", schedule.c},
                       {"delta", schedule.delta}};
  j["chain"] = Json{{"n_iter", chain.n_iter},     {"burn_in", chain.burn_in},
                    {"thin", chain.thin},         {"n_chains", chain.n_chains},
                    {"sweep", chain.sweep},       {"dump_trace", chain.dump_trace}};
  j["truth"] = Json{{"gamma", truth.gamma},
                    {"q", truth.q},
                    {"M", truth.M},
                    {"sigma0_sq", truth.sigma0_sq},
                    {"support_rule", truth.support_rule},
                    {"value_rule", truth.value_rule}};
  j["bench"] = Json{{"n_grid", bench.n_grid},
                    {"replicates", bench.replicates},
                    {"p_rule", bench.p_rule},
                    {"cert_rule", bench.cert_rule},
                    {"consistency_safety", bench.consistency_safety}};
  j["oracle"] = Json{{"nodes_per_dim", oracle.nodes_per_dim},
                     {"lambda_lo", double_to_json(oracle.lambda_lo)},
                     {"lambda_hi", double_to_json(oracle.lambda_hi)},
                     {"refine", oracle.refine}};
  j["checks"] = Json{{"c1", double_to_json(checks.c1)},
                     {"c2", double_to_json(checks.c2)},
                     {"separation", checks.separation},
                     {"orthogonality", checks.orthogonality},
                     {"a_L", checks.a_L},
                     {"a_U", checks.a_U}};
  j["data"] = Json{{"y_csv", data.y_csv}, {"design_csv", data.design_csv}};
  j["rate_fit"] = Json{{"metric", rate_fit.metric},
                       {"against", rate_fit.against},
                       {"max_slope", double_to_json(rate_fit.max_slope)}};
  return j;
}

RunConfig config_from_json(const Json& j) {
  RunConfig c;
  check_keys(j, "", {"seed", "out", "threads", "verbosity", "design", "kernel",
                     "prior", "hyper", "schedule", "chain", "truth", "bench",
                     "oracle", "checks", "data", "rate_fit"});
  get_to(j, "seed", c.seed, "");
  get_to(j, "out", c.out, "");
  get_to(j, "threads", c.threads, "");
  get_to(j, "verbosity", c.verbosity, "");

  if (j.contains("design")) {
    const Json& s = j.at("design");
    check_keys(s, "design", {"kind", "n", "p", "theta", "csv"});
    get_to(s, "kind", c.design.kind, "design");
    get_to(s, "n", c.design.n, "design");
    get_to(s, "p", c.design.p, "design");
    get_to(s, "theta", c.design.theta, "design");
    get_to(s, "csv", c.design.csv, "design");
  }
  if (j.contains("kernel")) {
    const Json& s = j.at("kernel");
    check_keys(s, "kernel", {"family", "theta", "scale", "scale_p_theta"});
    get_to(s, "family", c.kernel.family, "kernel");
    get_to(s, "theta", c.kernel.theta, "kernel");
    get_to(s, "scale", c.kernel.scale, "kernel");
    get_to(s, "scale_p_theta", c.kernel.scale_p_theta, "kernel");
  }
  get_to(j, "prior", c.prior, "");
  if (j.contains("hyper")) {
    const Json& s = j.at("hyper");
    check_keys(s, "hyper", {"a", "b"});
    get_to(s, "a", c.hyper.a, "hyper");
    get_to(s, "b", c.hyper.b, "hyper");
  }
  if (j.contains("schedule")) {
    const Json& s = j.at("schedule");
    check_keys(s, "schedule", {"regime", "c", "delta"});
    get_to(s, "regime", c.schedule.regime, "schedule");
    get_to(s, "c", c.schedule.c, "schedule");
    get_to(s, "delta", c.schedule.delta, "schedule");
  }
  if (j.contains("chain")) {
    const Json& s = j.at("chain");
    check_keys(s, "chain",
               {"n_iter", "burn_in", "thin", "n_chains", "sweep", "dump_trace"});
    get_to(s, "n_iter", c.chain.n_iter, "chain");
    get_to(s, "burn_in", c.chain.burn_in, "chain");
    get_to(s, "thin", c.chain.thin, "chain");
    get_to(s, "n_chains", c.chain.n_chains, "chain");
    get_to(s, "sweep", c.chain.sweep, "chain");
    get_to(s, "dump_trace", c.chain.dump_trace, "chain");
  }
  if (j.contains("truth")) {
    const Json& s = j.at("truth");
    check_keys(s, "truth", {"gamma", "q", "M", "sigma0_sq", "support_rule", "value_rule"});
    get_to(s, "gamma", c.truth.gamma, "truth");
    get_to(s, "q", c.truth.q, "truth");
    get_to(s, "M", c.truth.M, "truth");
    get_to(s, "sigma0_sq", c.truth.sigma0_sq, "truth");
    get_to(s, "support_rule", c.truth.support_rule, "truth");
    get_to(s, "value_rule", c.truth.value_rule, "truth");
  }
  if (j.contains("bench")) {
    const Json& s = j.at("bench");
    check_keys(s, "bench",
               {"n_grid", "replicates", "p_rule", "cert_rule", "consistency_safety"});
    get_to(s, "n_grid", c.bench.n_grid, "bench");
    get_to(s, "replicates", c.bench.replicates, "bench");
    get_to(s, "p_rule", c.bench.p_rule, "bench");
    get_to(s, "cert_rule", c.bench.cert_rule, "bench");
    get_to(s, "consistency_safety", c.bench.consistency_safety, "bench");
  }
  if (j.contains("oracle")) {
    const Json& s = j.at("oracle");
    check_keys(s, "oracle", {"nodes_per_dim", "lambda_lo", "lambda_hi", "refine"});
    get_to(s, "nodes_per_dim", c.oracle.nodes_per_dim, "oracle");
    if (s.contains("lambda_lo"))
      c.oracle.lambda_lo = json_to_double(s.at("lambda_lo"), "oracle.lambda_lo");
    if (s.contains("lambda_hi"))
      c.oracle.lambda_hi = json_to_double(s.at("lambda_hi"), "oracle.lambda_hi");
    get_to(s, "refine", c.oracle.refine, "oracle");
  }
  if (j.contains("checks")) {
    const Json& s = j.at("checks");
    check_keys(s, "checks", {"c1", "c2", "separation", "orthogonality", "a_L", "a_U"});
    if (s.contains("c1")) c.checks.c1 = json_to_double(s.at("c1"), "checks.c1");
    if (s.contains("c2")) c.checks.c2 = json_to_double(s.at("c2"), "checks.c2");
    get_to(s, "separation", c.checks.separation, "checks");
    get_to(s, "orthogonality", c.checks.orthogonality, "checks");
    get_to(s, "a_L", c.checks.a_L, "checks");
    get_to(s, "a_U", c.checks.a_U, "checks");
  }
  if (j.contains("data")) {
    const Json& s = j.at("data");
    check_keys(s, "data", {"y_csv", "design_csv"});
    get_to(s, "y_csv", c.data.y_csv, "data");
    get_to(s, "design_csv", c.data.design_csv, "data");
  }
  if (j.contains("rate_fit")) {
    const Json& s = j.at("rate_fit");
    check_keys(s, "rate_fit", {"metric", "against", "max_slope"});
    get_to(s, "metric", c.rate_fit.metric, "rate_fit");
    get_to(s, "against", c.rate_fit.against, "rate_fit");
    if (s.contains("max_slope"))
      c.rate_fit.max_slope = json_to_double(s.at("max_slope"), "rate_fit.max_slope");
  }
  return c;
}

RunConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides) {
  Json j = Json::object();
  if (!path.empty()) {
    const std::string text = read_text_file(path);
    try {
      j = Json::parse(text);
    } catch (const Json::exception& e) {
      throw ConfigError("cannot parse config " + path + ": " + e.what());
    }
  }
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override must look like key=value: " + ov);
    const std::string key = ov.substr(0, eq);
    const std::string value = ov.substr(eq + 1);
    // Walk the dotted path; create intermediate objects as needed.
    Json* node = &j;
    size_t pos = 0;
    for (;;) {
      const auto dot = key.find('.', pos);
      const std::string part = key.substr(pos, dot == std::string::npos
                                                   ? std::string::npos
                                                   : dot - pos);
      if (part.empty()) throw ConfigError("bad override key: " + key);
      if (dot == std::string::npos) {
        if (node->contains(part) && (*node)[part].is_structured())
          throw ConfigError("override targets a non-scalar key: " + key);
        Json parsed;
        try {
          parsed = Json::parse(value);
        } catch (const Json::exception&) {
          parsed = Json(value);  // bare strings are allowed
        }
        if (parsed.is_structured())
          throw ConfigError("overrides may only set scalar values: " + ov);
        (*node)[part] = parsed;
        break;
      }
      if (!node->contains(part)) (*node)[part] = Json::object();
      node = &(*node)[part];
      if (!node->is_object())
        throw ConfigError("override path crosses a scalar: " + key);
      pos = dot + 1;
    }
  }
  return config_from_json(j);
}

}  // namespace rvm
