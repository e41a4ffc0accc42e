#include "gibbscal/run_config.hpp"

#include <cmath>
#include <set>

#include "gibbscal/data_io.hpp"
#include "gibbscal/errors.hpp"
#include "gibbscal/harness.hpp"

namespace gibbscal {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  fail(ErrorKind::Configuration, "config key '" + key + "' " + what);
}

// Typed, strict access to one JSON object of the config.
class Section {
 public:
  Section(const Json& j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) bad(path_, "must be an object");
    for (const auto& [key, value] : j.items())
      if (!allowed.count(key)) bad(key_of(key), "is not a recognised setting");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const Json& raw(const std::string& key) const {
    if (!has(key)) bad(key_of(key), "is required");
    return j_.at(key);
  }
  std::string key_of(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const std::string& key, std::optional<double> fallback = {}) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      bad(key_of(key), "is required");
    }
    const Json& v = j_.at(key);
    if (!v.is_number()) bad(key_of(key), "must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) bad(key_of(key), "must be finite");
    return d;
  }
  long long integer(const std::string& key, std::optional<long long> fallback = {}) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      bad(key_of(key), "is required");
    }
    const Json& v = j_.at(key);
    if (!v.is_number_integer()) bad(key_of(key), "must be an integer");
    return v.get<long long>();
  }
  std::uint64_t seed(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_number_unsigned()) bad(key_of(key), "must be a non-negative integer");
    return v.get<std::uint64_t>();
  }
  std::string string(const std::string& key, std::optional<std::string> fallback = {}) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      bad(key_of(key), "is required");
    }
    const Json& v = j_.at(key);
    if (!v.is_string()) bad(key_of(key), "must be a string");
    return v.get<std::string>();
  }
  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_boolean()) bad(key_of(key), "must be true or false");
    return v.get<bool>();
  }
  std::string choice(const std::string& key, const std::string& fallback, const std::set<std::string>& options) const {
    const std::string s = string(key, fallback);
    if (!options.count(s)) {
      std::string list;
      for (const auto& o : options) list += (list.empty() ? "" : ", ") + o;
      bad(key_of(key), "must be one of: " + list);
    }
    return s;
  }
  std::pair<double, double> pair(const std::string& key) const {
    const Json& v = raw(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      bad(key_of(key), "must be a two-number array");
    return {v[0].get<double>(), v[1].get<double>()};
  }

 private:
  const Json& j_;
  std::string path_;
};

const std::set<std::string> kModelNames{"linear", "polynomial", "ramp", "velocity"};

std::string variant_name(BootstrapVariant v) {
  switch (v) {
    case BootstrapVariant::ParametricPrior:
      return "parametric_prior";
    case BootstrapVariant::ParametricMap:
      return "parametric_map";
    case BootstrapVariant::NonparametricBlock:
      return "nonparametric_block";
  }
  return "parametric_prior";
}

BootstrapVariant variant_from(const std::string& s) {
  if (s == "parametric_map") return BootstrapVariant::ParametricMap;
  if (s == "nonparametric_block") return BootstrapVariant::NonparametricBlock;
  return BootstrapVariant::ParametricPrior;
}

Json marginal_json(const PriorEntry& e) {
  Json j{{"name", e.name}};
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Uniform>) {
          j["type"] = "uniform";
          j["lo"] = m.lo;
          j["hi"] = m.hi;
        } else if constexpr (std::is_same_v<T, Normal>) {
          j["type"] = "normal";
          j["mean"] = m.mean;
          j["sd"] = m.sd;
        } else {
          j["type"] = "inverse_gamma";
          j["shape"] = m.shape;
          j["scale"] = m.scale;
        }
      },
      e.marginal);
  return j;
}

PriorEntry parse_prior_entry(const Json& j, const std::string& path) {
  const std::string type = Section(j, path, {"name", "type", "lo", "hi", "mean", "sd", "shape", "scale"})
                               .choice("type", "", {"uniform", "normal", "inverse_gamma"});
  PriorEntry e;
  if (type == "uniform") {
    Section s(j, path, {"name", "type", "lo", "hi"});
    e.name = s.string("name");
    e.marginal = Uniform{s.number("lo"), s.number("hi")};
  } else if (type == "normal") {
    Section s(j, path, {"name", "type", "mean", "sd"});
    e.name = s.string("name");
    e.marginal = Normal{s.number("mean"), s.number("sd")};
  } else {
    Section s(j, path, {"name", "type", "shape", "scale"});
    e.name = s.string("name");
    e.marginal = InverseGamma{s.number("shape"), s.number("scale")};
  }
  try {
    validate(e.marginal);
  } catch (const Error& err) {
    bad(path, std::string("is not a valid prior: ") + err.what());
  }
  return e;
}

void validate_model_params(const ModelSection& m) {
  const std::string path = "model.params";
  if (m.name == "linear") {
    Section(m.params, path, {});
  } else if (m.name == "polynomial") {
    Section s(m.params, path, {"degree", "through_origin"});
    const auto degree = s.integer("degree");
    if (degree < 0 || degree > 10) bad(s.key_of("degree"), "must lie in [0, 10]");
    s.boolean("through_origin", false);
  } else if (m.name == "ramp") {
    Section s(m.params, path, {"amplitude", "slope", "b_ref", "t0", "width"});
    if (!(s.number("amplitude") > 0)) bad(s.key_of("amplitude"), "must be positive");
    if (!(s.number("width", 0.06) > 0)) bad(s.key_of("width"), "must be positive");
  } else {
    Section s(m.params, path, {"amplitude"});
    if (!(s.number("amplitude") > 0)) bad(s.key_of("amplitude"), "must be positive");
  }
}

}  // namespace

RunConfig RunConfig::from_json(const Json& j, const std::filesystem::path& base_directory) {
  RunConfig c;
  c.base_directory = base_directory;
  Section root(j, "", {"data", "model", "prior", "loss", "discrepancy", "tuning", "sampler", "ensemble", "outputs"});

  {
    Section s(root.raw("data"), "data", {"experiments"});
    const Json& list = s.raw("experiments");
    if (!list.is_array() || list.empty()) bad("data.experiments", "must be a nonempty array");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string path = "data.experiments[" + std::to_string(i) + "]";
      Section e(list[i], path, {"id", "path"});
      ExperimentSource src;
      src.path = e.string("path");
      src.id = e.string("id", std::filesystem::path(src.path).stem().string());
      if (!ids.insert(src.id).second) bad(path + ".id", "duplicates another experiment id");
      c.data.push_back(src);
    }
  }

  {
    Section s(root.raw("model"), "model", {"name", "params"});
    c.model.name = s.choice("name", "", kModelNames);
    if (s.has("params")) c.model.params = s.raw("params");
    validate_model_params(c.model);
  }

  {
    const Json& list = root.raw("prior");
    if (!list.is_array() || list.empty()) bad("prior", "must be a nonempty array");
    for (std::size_t i = 0; i < list.size(); ++i)
      c.prior.push_back(parse_prior_entry(list[i], "prior[" + std::to_string(i) + "]"));
  }

  {
    Section s(root.raw("loss"), "loss", {"type", "quadrature", "offset_expected_discrepancy"});
    c.loss.type = s.choice("type", "l2", {"l2", "gaussian_nll"});
    c.loss.quadrature =
        s.choice("quadrature", "plain_sum", {"plain_sum", "trapezoid"}) == "trapezoid" ? Quadrature::Trapezoid
                                                                                         : Quadrature::PlainSum;
    c.loss.offset_expected_discrepancy = s.boolean("offset_expected_discrepancy", false);
    if (c.loss.offset_expected_discrepancy && c.loss.type != "l2")
      bad("loss.offset_expected_discrepancy", "applies to the l2 loss only");
  }

  if (root.has("discrepancy")) {
    const Json& d = root.raw("discrepancy");
    Section s(d, "discrepancy", {"type", "kernel", "region", "magnitude", "direction", "noise_sd"});
    c.discrepancy.type = s.choice("type", "none", {"none", "gp_empirical_bayes", "gp_explicit", "shift_family"});
    c.discrepancy.noise_sd = s.number("noise_sd", 0.0);
    if (!(c.discrepancy.noise_sd >= 0)) bad("discrepancy.noise_sd", "must be >= 0");
    if (s.has("kernel")) {
      Section k(s.raw("kernel"), "discrepancy.kernel", {"s2", "length_scale", "nugget"});
      c.discrepancy.kernel = SqExpKernel{k.number("s2"), k.number("length_scale"), k.number("nugget", 0.0)};
      try {
        c.discrepancy.kernel.validate();
      } catch (const Error& err) {
        bad("discrepancy.kernel", err.what());
      }
    } else if (c.discrepancy.type == "gp_explicit") {
      bad("discrepancy.kernel", "is required for gp_explicit");
    }
    if (c.discrepancy.type == "shift_family") {
      const auto [rlo, rhi] = s.pair("region");
      const auto [mlo, mhi] = s.pair("magnitude");
      c.discrepancy.shift = ShiftFamily{rlo, rhi, mlo, mhi, s.number("direction", 1.0)};
      if (!(rlo < rhi)) bad("discrepancy.region", "must satisfy lo < hi");
      if (!(mlo <= mhi)) bad("discrepancy.magnitude", "must satisfy lo <= hi");
      if (std::abs(c.discrepancy.shift.direction) != 1.0) bad("discrepancy.direction", "must be 1 or -1");
    } else {
      for (const char* key : {"region", "magnitude", "direction"})
        if (s.has(key)) bad(s.key_of(key), "applies to shift_family only");
    }
  }
  if (c.loss.offset_expected_discrepancy && c.discrepancy.type != "shift_family")
    bad("loss.offset_expected_discrepancy", "needs a discrepancy with a nonzero mean (shift_family)");

  {
    Section s(root.raw("tuning"), "tuning",
              {"method", "variant", "B", "w_grid", "alpha", "seed", "interval", "policy", "block_length", "w", "n_iter",
               "n_burn"});
    auto& t = c.tuning;
    t.method = s.choice("method", "bootstrap", {"bootstrap", "ess", "fixed"});
    t.variant = variant_from(
        s.choice("variant", "parametric_prior", {"parametric_prior", "parametric_map", "nonparametric_block"}));
    t.B = static_cast<int>(s.integer("B", 100));
    if (t.B < 20) bad("tuning.B", "must be >= 20");
    t.alpha = s.number("alpha", 0.1);
    if (!(t.alpha > 0 && t.alpha < 1)) bad("tuning.alpha", "must lie in (0, 1)");
    t.seed = s.seed("seed", 1);
    t.interval = s.choice("interval", "laplace", {"laplace", "mcmc"}) == "mcmc" ? IntervalMethod::Mcmc
                                                                                 : IntervalMethod::Laplace;
    t.policy = s.choice("policy", "spline_root", {"spline_root", "threshold"}) == "threshold"
                   ? SelectionPolicy::Threshold
                   : SelectionPolicy::SplineRoot;
    t.block_length = s.number("block_length", 0.0);
    if (t.method == "bootstrap" && t.variant == BootstrapVariant::NonparametricBlock && !(t.block_length > 0))
      bad("tuning.block_length", "must be positive for the nonparametric_block variant");
    t.w = s.number("w", 1.0);
    if (!(t.w >= 0)) bad("tuning.w", "must be >= 0");
    t.n_iter = static_cast<int>(s.integer("n_iter", 4000));
    t.n_burn = static_cast<int>(s.integer("n_burn", 1000));
    if (t.n_burn < 0 || t.n_iter - t.n_burn < 100) bad("tuning.n_iter", "must exceed tuning.n_burn by at least 100");
    if (s.has("w_grid")) {
      const Json& g = s.raw("w_grid");
      if (g.is_array()) {
        t.w_grid.clear();
        for (const auto& v : g) {
          if (!v.is_number()) bad("tuning.w_grid", "must contain numbers only");
          t.w_grid.push_back(v.get<double>());
        }
      } else {
        Section gs(g, "tuning.w_grid", {"lo", "hi", "n"});
        const double lo = gs.number("lo");
        const double hi = gs.number("hi");
        const auto n = gs.integer("n");
        if (!(lo > 0 && hi > lo) || n < 2) bad("tuning.w_grid", "needs 0 < lo < hi and n >= 2");
        t.w_grid = log_spaced_grid(lo, hi, static_cast<int>(n));
      }
      if (t.w_grid.empty()) bad("tuning.w_grid", "must be nonempty");
      for (std::size_t i = 0; i < t.w_grid.size(); ++i) {
        if (!(t.w_grid[i] > 0)) bad("tuning.w_grid", "values must be positive");
        if (i > 0 && !(t.w_grid[i] > t.w_grid[i - 1])) bad("tuning.w_grid", "must be strictly increasing");
      }
    }
  }

  if (root.has("sampler")) {
    Section s(root.raw("sampler"), "sampler", {"n_iter", "n_burn"});
    c.sampler.n_iter = static_cast<int>(s.integer("n_iter", 20000));
    c.sampler.n_burn = static_cast<int>(s.integer("n_burn", 5000));
    if (c.sampler.n_burn < 0 || c.sampler.n_iter - c.sampler.n_burn < 100)
      bad("sampler.n_iter", "must exceed sampler.n_burn by at least 100");
  }

  if (root.has("ensemble")) {
    Section s(root.raw("ensemble"), "ensemble", {"scaling", "tol", "max_iter", "loss_multiplier"});
    c.ensemble.scaling = consensus_scaling_from_string(
        s.choice("scaling", "across_experiments", {"within_experiment", "across_experiments"}));
    c.ensemble.tol = s.number("tol", 1e-10);
    if (!(c.ensemble.tol > 0)) bad("ensemble.tol", "must be positive");
    c.ensemble.max_iter = static_cast<int>(s.integer("max_iter", 500));
    if (c.ensemble.max_iter < 1) bad("ensemble.max_iter", "must be >= 1");
    c.ensemble.loss_multiplier = s.boolean("loss_multiplier", false);
  }

  {
    Section s(root.raw("outputs"), "outputs", {"directory"});
    c.output_directory = s.string("directory");
  }

  const std::size_t need = c.make_model()->dim_theta() + (c.loss.type == "gaussian_nll" ? 1 : 0);
  if (c.prior.size() != need)
    bad("prior", "has " + std::to_string(c.prior.size()) + " entries; model '" + c.model.name + "' with loss '" +
                     c.loss.type + "' needs " + std::to_string(need));
  if (c.loss.type == "gaussian_nll" && !positive_support(c.prior.back().marginal))
    bad("prior[" + std::to_string(need - 1) + "]", "must have positive support (it is the noise variance)");
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    fail(ErrorKind::Configuration, std::string("cannot read config: ") + e.what());
  }
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Configuration, std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(j, path.parent_path());
}

Json RunConfig::to_json() const {
  Json experiments = Json::array();
  for (const auto& e : data) experiments.push_back({{"id", e.id}, {"path", e.path}});
  Json priors = Json::array();
  for (const auto& p : prior) priors.push_back(marginal_json(p));

  Json disc{{"type", discrepancy.type}, {"noise_sd", discrepancy.noise_sd}};
  if (discrepancy.type == "gp_explicit" || discrepancy.type == "gp_empirical_bayes")
    disc["kernel"] = gibbscal::to_json(discrepancy.kernel);
  if (discrepancy.type == "shift_family") {
    disc["region"] = {discrepancy.shift.region_lo, discrepancy.shift.region_hi};
    disc["magnitude"] = {discrepancy.shift.magnitude_lo, discrepancy.shift.magnitude_hi};
    disc["direction"] = discrepancy.shift.direction;
  }

  return Json{
      {"data", {{"experiments", experiments}}},
      {"model", {{"name", model.name}, {"params", model.params}}},
      {"prior", priors},
      {"loss",
       {{"type", loss.type},
        {"quadrature", loss.quadrature == Quadrature::Trapezoid ? "trapezoid" : "plain_sum"},
        {"offset_expected_discrepancy", loss.offset_expected_discrepancy}}},
      {"discrepancy", disc},
      {"tuning",
       {{"method", tuning.method},
        {"variant", variant_name(tuning.variant)},
        {"B", tuning.B},
        {"w_grid", tuning.w_grid},
        {"alpha", tuning.alpha},
        {"seed", tuning.seed},
        {"interval", tuning.interval == IntervalMethod::Mcmc ? "mcmc" : "laplace"},
        {"policy", tuning.policy == SelectionPolicy::Threshold ? "threshold" : "spline_root"},
        {"block_length", tuning.block_length},
        {"w", tuning.w},
        {"n_iter", tuning.n_iter},
        {"n_burn", tuning.n_burn}}},
      {"sampler", {{"n_iter", sampler.n_iter}, {"n_burn", sampler.n_burn}}},
      {"ensemble",
       {{"scaling", to_string(ensemble.scaling)},
        {"tol", ensemble.tol},
        {"max_iter", ensemble.max_iter},
        {"loss_multiplier", ensemble.loss_multiplier}}},
      {"outputs", {{"directory", output_directory}}},
  };
}

ModelPtr RunConfig::make_model() const {
  if (model.name == "linear") return std::make_shared<PolynomialModel>(1, true);
  if (model.name == "polynomial")
    return std::make_shared<PolynomialModel>(model.params.at("degree").get<int>(),
                                             model.params.value("through_origin", false));
  if (model.name == "ramp") {
    const auto& p = model.params;
    return make_ramp_model(p.at("amplitude").get<double>(), p.value("slope", 0.1), p.value("b_ref", 3.9),
                           p.value("t0", 0.3), p.value("width", 0.06));
  }
  return make_velocity_model(model.params.at("amplitude").get<double>());
}

ParameterPrior RunConfig::make_prior() const {
  std::vector<Marginal> marginals;
  std::vector<std::string> names;
  for (const auto& p : prior) {
    marginals.push_back(p.marginal);
    names.push_back(p.name);
  }
  return ParameterPrior(std::move(marginals), std::move(names));
}

LossFunction RunConfig::make_loss(const Eigen::VectorXd& expected_discrepancy) const {
  if (loss.type == "gaussian_nll") return GaussianNllLoss{};
  return L2Loss{loss.quadrature, loss.offset_expected_discrepancy ? expected_discrepancy : Eigen::VectorXd()};
}

DiscrepancyPrior RunConfig::make_discrepancy(const SqExpKernel& kernel) const {
  DiscrepancyPrior d;
  d.noise_sd = discrepancy.noise_sd;
  if (discrepancy.type == "gp_explicit" || discrepancy.type == "gp_empirical_bayes") d.form = GpDiscrepancy{kernel};
  if (discrepancy.type == "shift_family") d.form = discrepancy.shift;
  return d;
}

BootstrapConfig RunConfig::make_bootstrap() const {
  BootstrapConfig b;
  b.B = tuning.B;
  b.w_grid = tuning.w_grid;
  b.alpha = tuning.alpha;
  b.variant = tuning.variant;
  b.block_length = tuning.block_length;
  b.seed = tuning.seed;
  b.interval_method = tuning.interval;
  b.n_iter = tuning.n_iter;
  b.n_burn = tuning.n_burn;
  return b;
}

std::filesystem::path RunConfig::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() ? p : base_directory / p;
}

}  // namespace gibbscal
