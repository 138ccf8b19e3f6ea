#include "potlab/serialize.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace potlab::io {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

void atomic_write(const std::string& path, const std::string& content) {
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_sig(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

json measure_to_json(const DiscreteMeasure& m) {
  json pts = json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    json p = json::array();
    for (double v : m.point(i)) p.push_back(v);
    pts.push_back(std::move(p));
  }
  return json{{"d", m.dim()}, {"points", std::move(pts)}, {"weights", m.weights()}};
}

DiscreteMeasure measure_from_json(const json& j) {
  std::size_t d = j.at("d").get<std::size_t>();
  std::vector<double> flat;
  for (const auto& p : j.at("points")) {
    if (p.size() != d) throw std::invalid_argument("measure json: point dimension mismatch");
    for (const auto& v : p) flat.push_back(v.get<double>());
  }
  return DiscreteMeasure(std::move(flat), d, j.at("weights").get<std::vector<double>>());
}

DiscreteMeasure load_measure(const std::string& path) {
  return measure_from_json(json::parse(read_file(path)));
}

void save_measure(const DiscreteMeasure& m, const std::string& path) {
  atomic_write(path, measure_to_json(m).dump(2) + "\n");
}

json plan_to_json(const TransportPlan& plan) {
  json rows = json::array();
  for (std::size_t i = 0; i < plan.gamma.rows; ++i) {
    json r = json::array();
    for (std::size_t j = 0; j < plan.gamma.cols; ++j) r.push_back(plan.gamma(i, j));
    rows.push_back(std::move(r));
  }
  return json{{"n", plan.gamma.rows},
              {"m", plan.gamma.cols},
              {"value", plan.value},
              {"gamma", std::move(rows)}};
}

json certificate_to_json(const DualCertificate& cert) {
  return json{{"f", cert.potentials.f},
              {"g", cert.potentials.g},
              {"dual_value", cert.dual_value},
              {"lipschitz_violation", cert.lipschitz_violation}};
}

json report_to_json(const CheckReport& rep) {
  return json{{"name", rep.name},       {"lhs", rep.lhs},
              {"rhs", rep.rhs},         {"abs_gap", rep.abs_gap},
              {"tolerance", rep.tolerance}, {"passed", rep.passed},
              {"details", rep.details}};
}

json reports_to_json(const std::vector<CheckReport>& reps) {
  json arr = json::array();
  for (const auto& r : reps) arr.push_back(report_to_json(r));
  return arr;
}

namespace {

std::string objective_to_string(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::Pot: return "pot";
    case ObjectiveKind::Aae: return "aae";
    case ObjectiveKind::Vae: return "vae";
    case ObjectiveKind::Wgan: return "wgan";
  }
  return "pot";
}

ObjectiveKind objective_from_string(const std::string& s) {
  if (s == "pot") return ObjectiveKind::Pot;
  if (s == "aae") return ObjectiveKind::Aae;
  if (s == "vae") return ObjectiveKind::Vae;
  if (s == "wgan") return ObjectiveKind::Wgan;
  throw std::invalid_argument("unknown objective: " + s);
}

std::string encoder_to_string(EncoderKind k) {
  switch (k) {
    case EncoderKind::Deterministic: return "deterministic";
    case EncoderKind::GaussianDiag: return "gaussian_diag";
    case EncoderKind::Implicit: return "implicit";
    case EncoderKind::None: return "none";
  }
  return "deterministic";
}

EncoderKind encoder_from_string(const std::string& s) {
  if (s == "deterministic") return EncoderKind::Deterministic;
  if (s == "gaussian_diag") return EncoderKind::GaussianDiag;
  if (s == "implicit") return EncoderKind::Implicit;
  if (s == "none") return EncoderKind::None;
  throw std::invalid_argument("unknown encoder kind: " + s);
}

json dataset_to_json(const ToyDataset& d) {
  if (const auto* g = std::get_if<GaussianData>(&d))
    return json{{"kind", "gaussian"}, {"mean", g->mean}, {"var_diag", g->var_diag}};
  if (const auto* r = std::get_if<Ring8Data>(&d))
    return json{{"kind", "ring8"}, {"radius", r->radius}, {"stddev", r->stddev}};
  if (const auto* s = std::get_if<SwissRoll2dData>(&d))
    return json{{"kind", "swissroll2d"}, {"noise", s->noise}};
  const auto& t = std::get<TwoPointsData>(d);
  return json{{"kind", "two_points"}, {"x0", t.x0}, {"x1", t.x1}, {"p", t.p}};
}

ToyDataset dataset_from_json(const json& j) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "gaussian")
    return GaussianData{j.at("mean").get<std::vector<double>>(),
                        j.at("var_diag").get<std::vector<double>>()};
  if (kind == "ring8")
    return Ring8Data{j.value("radius", 2.0), j.value("stddev", 0.05)};
  if (kind == "swissroll2d") return SwissRoll2dData{j.value("noise", 0.05)};
  if (kind == "two_points")
    return TwoPointsData{j.value("x0", 0.0), j.value("x1", 1.0), j.value("p", 0.5)};
  throw std::invalid_argument("unknown dataset kind: " + kind);
}

std::string cost_to_string(const CostKind& c) {
  if (std::holds_alternative<SqEuclidean>(c)) return "sq_euclidean";
  if (std::holds_alternative<Euclidean>(c)) return "euclidean";
  throw std::invalid_argument("custom cost is not serializable in a config");
}

CostKind cost_from_string(const std::string& s) {
  if (s == "sq_euclidean") return SqEuclidean{};
  if (s == "euclidean") return Euclidean{};
  throw std::invalid_argument("unknown cost kind: " + s);
}

}  // namespace

json config_to_json(const TrainConfig& c) {
  return json{{"objective", objective_to_string(c.objective)},
              {"dataset", dataset_to_json(c.dataset)},
              {"latent_dim", c.latent_dim},
              {"cost", cost_to_string(c.cost)},
              {"lambda", c.lambda},
              {"sigma2", c.sigma2},
              {"encoder", encoder_to_string(c.encoder)},
              {"noise_dim", c.noise_dim},
              {"enc_hidden", c.enc_hidden},
              {"dec_hidden", c.dec_hidden},
              {"disc_hidden", c.disc_hidden},
              {"activation", activation_to_string(c.activation)},
              {"penalty", c.penalty == PenaltyKind::Adversarial ? "adversarial"
                                                                : "moment_match"},
              {"penalty_weight", c.penalty_weight},
              {"optimizer", c.optimizer == OptimizerKind::Adam ? "adam" : "sgd"},
              {"lr", c.lr},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"adam_eps", c.adam_eps},
              {"batch_size", c.batch_size},
              {"steps", c.steps},
              {"disc_steps", c.disc_steps},
              {"eval_every", c.eval_every},
              {"n_eval", c.n_eval},
              {"seed", c.seed},
              {"wgan_clip", c.wgan_clip}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.objective = objective_from_string(j.at("objective").get<std::string>());
  if (j.contains("dataset")) c.dataset = dataset_from_json(j.at("dataset"));
  c.latent_dim = j.value("latent_dim", c.latent_dim);
  if (j.contains("cost")) c.cost = cost_from_string(j.at("cost").get<std::string>());
  c.lambda = j.value("lambda", c.lambda);
  c.sigma2 = j.value("sigma2", c.sigma2);
  if (j.contains("encoder"))
    c.encoder = encoder_from_string(j.at("encoder").get<std::string>());
  c.noise_dim = j.value("noise_dim", c.noise_dim);
  c.enc_hidden = j.value("enc_hidden", c.enc_hidden);
  c.dec_hidden = j.value("dec_hidden", c.dec_hidden);
  c.disc_hidden = j.value("disc_hidden", c.disc_hidden);
  if (j.contains("activation"))
    c.activation = activation_from_string(j.at("activation").get<std::string>());
  if (j.contains("penalty")) {
    std::string p = j.at("penalty").get<std::string>();
    if (p == "adversarial")
      c.penalty = PenaltyKind::Adversarial;
    else if (p == "moment_match")
      c.penalty = PenaltyKind::MomentMatch;
    else
      throw std::invalid_argument("unknown penalty kind: " + p);
  }
  c.penalty_weight = j.value("penalty_weight", c.penalty_weight);
  if (j.contains("optimizer")) {
    std::string o = j.at("optimizer").get<std::string>();
    if (o == "adam")
      c.optimizer = OptimizerKind::Adam;
    else if (o == "sgd")
      c.optimizer = OptimizerKind::Sgd;
    else
      throw std::invalid_argument("unknown optimizer kind: " + o);
  }
  c.lr = j.value("lr", c.lr);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.adam_eps = j.value("adam_eps", c.adam_eps);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.steps = j.value("steps", c.steps);
  c.disc_steps = j.value("disc_steps", c.disc_steps);
  c.eval_every = j.value("eval_every", c.eval_every);
  c.n_eval = j.value("n_eval", c.n_eval);
  c.seed = j.value("seed", c.seed);
  c.wgan_clip = j.value("wgan_clip", c.wgan_clip);
  return c;
}

json fragility_to_json(const FragilityResult& r) {
  return json{{"epsilon", r.epsilon},
              {"suboptimality", r.suboptimality},
              {"cosine", r.cosine},
              {"grad_fstar", r.grad_fstar},
              {"grad_feps", r.grad_feps},
              {"lipschitz_violation", r.lipschitz_violation},
              {"w1", r.w1},
              {"witness", r.witness}};
}

void save_checkpoint(const MlpNet& net, const std::string& prefix) {
  const auto& data = net.params().data();
  std::string bytes(data.size() * sizeof(double), '\0');
  std::memcpy(bytes.data(), data.data(), bytes.size());
  atomic_write(prefix + ".bin", bytes);

  json side{{"widths", net.widths()}, {"count", data.size()}};
  json acts = json::array();
  for (Activation a : net.activations()) acts.push_back(activation_to_string(a));
  side["activations"] = std::move(acts);
  atomic_write(prefix + ".json", side.dump(2) + "\n");
}

MlpNet load_checkpoint(const std::string& prefix) {
  json side = json::parse(read_file(prefix + ".json"));
  auto widths = side.at("widths").get<std::vector<std::size_t>>();
  std::vector<Activation> acts;
  for (const auto& a : side.at("activations"))
    acts.push_back(activation_from_string(a.get<std::string>()));
  std::size_t count = side.at("count").get<std::size_t>();

  std::string bytes = read_file(prefix + ".bin");
  if (bytes.size() != count * sizeof(double))
    throw std::runtime_error("checkpoint size mismatch: " + prefix + ".bin");
  std::vector<double> data(count);
  std::memcpy(data.data(), bytes.data(), bytes.size());
  return MlpNet(std::move(widths), std::move(acts), std::move(data));
}

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
  std::ostringstream out;
  out << "step,recon,penalty,total,w_eval,ms\n";
  for (const auto& r : rows)
    out << r.step << ',' << format_sig(r.recon) << ',' << format_sig(r.penalty) << ','
        << format_sig(r.total) << ',' << format_sig(r.w_eval) << ','
        << format_sig(r.ms) << '\n';
  atomic_write(path, out.str());
}

}  // namespace potlab::io
