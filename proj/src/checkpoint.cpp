#include "sttgcn/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sttgcn/errors.hpp"

namespace sttgcn {
namespace {

using json = nlohmann::json;

std::string_view rule_name(RankRule r) {
  switch (r) {
    case RankRule::full: return "full";
    case RankRule::sqrt: return "sqrt";
    default: return "cbrt";
  }
}

RankRule parse_rule(const std::string& s) {
  if (s == "full") return RankRule::full;
  if (s == "sqrt") return RankRule::sqrt;
  if (s == "cbrt") return RankRule::cbrt;
  throw DataError("checkpoint has unknown rank rule '" + s + "'");
}

json mat_json(const Mat& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data().begin(), m.data().end())}};
}

Mat mat_from(const json& j) {
  return Mat(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(), j.at("data").get<std::vector<double>>());
}

json conv_json(const ConvLayerParams& c) {
  json theta = json::array();
  for (const Mat& t : c.theta) theta.push_back(mat_json(t));
  return {{"d_in", c.d_in}, {"d_out", c.d_out}, {"p", c.p}, {"activation", activation_name(c.activation)},
          {"theta", theta}};
}

ConvLayerParams conv_from(const json& j) {
  ConvLayerParams c;
  c.d_in = j.at("d_in").get<std::size_t>();
  c.d_out = j.at("d_out").get<std::size_t>();
  c.p = j.at("p").get<int>();
  c.activation = parse_activation(j.at("activation").get<std::string>());
  for (const json& t : j.at("theta")) c.theta.push_back(mat_from(t));
  return c;
}

json config_json(const TrainConfig& c) {
  json j = {{"epochs", c.epochs},
            {"learning_rate", c.learning_rate},
            {"batch_size", c.batch_size},
            {"lambda", c.lambda},
            {"p", c.p},
            {"mode", conv_mode_name(c.mode)},
            {"rank_rule", rule_name(c.rank_rule)},
            {"refactorize_every", c.refactorize_every},
            {"seed", c.seed},
            {"t_in", c.t_in},
            {"t_out", c.t_out},
            {"hidden", c.hidden},
            {"embed", c.embed},
            {"conv1", c.conv1},
            {"conv2", c.conv2},
            {"val_fraction", c.val_fraction},
            {"conv_activation", activation_name(c.conv_activation)},
            {"readout_activation", activation_name(c.readout_activation)},
            {"hooi_max_iter", c.hooi.max_iter},
            {"hooi_tol", c.hooi.tol}};
  if (c.ranks) {
    j["ranks"] = {c.ranks->n, c.ranks->d, c.ranks->t};
  } else {
    j["ranks"] = nullptr;
  }
  return j;
}

TrainConfig config_from(const json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.lambda = j.at("lambda").get<double>();
  c.p = j.at("p").get<int>();
  c.mode = parse_conv_mode(j.at("mode").get<std::string>());
  c.rank_rule = parse_rule(j.at("rank_rule").get<std::string>());
  c.refactorize_every = j.at("refactorize_every").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.t_in = j.at("t_in").get<std::size_t>();
  c.t_out = j.at("t_out").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.embed = j.at("embed").get<std::size_t>();
  c.conv1 = j.at("conv1").get<std::size_t>();
  c.conv2 = j.at("conv2").get<std::size_t>();
  c.val_fraction = j.at("val_fraction").get<double>();
  c.conv_activation = parse_activation(j.at("conv_activation").get<std::string>());
  c.readout_activation = parse_activation(j.at("readout_activation").get<std::string>());
  c.hooi.max_iter = j.at("hooi_max_iter").get<int>();
  c.hooi.tol = j.at("hooi_tol").get<double>();
  if (!j.at("ranks").is_null()) {
    const auto r = j.at("ranks").get<std::vector<std::size_t>>();
    if (r.size() != 3) throw DataError("checkpoint ranks must have three entries");
    c.ranks = Ranks{r[0], r[1], r[2]};
  }
  return c;
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& c) {
  const ModelParams& p = c.params;
  json j = {{"format", "sttgcn-checkpoint"},
            {"version", kCheckpointVersion},
            {"seed", c.seed},
            {"scaler_max", c.scaler.max},
            {"config", config_json(c.config)},
            {"params",
             {{"fc1", {{"w", mat_json(p.fc1.w)}, {"b", p.fc1.b}}},
              {"fc2", {{"w", mat_json(p.fc2.w)}, {"b", p.fc2.b}}},
              {"conv1", conv_json(p.conv1)},
              {"conv2", conv_json(p.conv2)},
              {"readout",
               {{"w", mat_json(p.readout.w)},
                {"b", p.readout.b},
                {"activation", activation_name(p.readout.activation)}}}}}};
  return j.dump(1);
}

Checkpoint checkpoint_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.value("format", std::string()) != "sttgcn-checkpoint") throw DataError("not an sttgcn checkpoint");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw DataError("unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint c;
    c.seed = j.at("seed").get<std::uint64_t>();
    c.scaler.max = j.at("scaler_max").get<double>();
    c.config = config_from(j.at("config"));
    const json& p = j.at("params");
    c.params.fc1 = {mat_from(p.at("fc1").at("w")), p.at("fc1").at("b").get<std::vector<double>>()};
    c.params.fc2 = {mat_from(p.at("fc2").at("w")), p.at("fc2").at("b").get<std::vector<double>>()};
    c.params.conv1 = conv_from(p.at("conv1"));
    c.params.conv2 = conv_from(p.at("conv2"));
    c.params.readout.w = mat_from(p.at("readout").at("w"));
    c.params.readout.b = p.at("readout").at("b").get<std::vector<double>>();
    c.params.readout.activation = parse_activation(p.at("readout").at("activation").get<std::string>());
    validate_params(c.params);
    return c;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  std::ofstream out(path);
  if (!out) throw DataError(path.string() + ": cannot write checkpoint");
  out << checkpoint_to_json(c) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open checkpoint");
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace sttgcn
