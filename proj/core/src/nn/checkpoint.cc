#include "gforge/nn/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <utility>
#include <vector>

#include "gforge/error.h"
#include "json.hpp"

namespace gforge::nn {
namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'G', 'F', 'C', 'K', 'P', 'T', '\0', '\0'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

json adam_json(const AdamConfig& a) {
  return json{{"lr", a.lr}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.eps}};
}

template <typename V>
void read_key(const json& j, const char* key, V& out) {
  if (j.contains(key)) out = j.at(key).get<V>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) fail_invalid("unknown config key '" + it.key() + "' in " + where);
  }
}

AdamConfig adam_from(const json& j, AdamConfig a, const std::string& where) {
  reject_unknown(j, {"lr", "beta1", "beta2", "eps"}, where);
  read_key(j, "lr", a.lr);
  read_key(j, "beta1", a.beta1);
  read_key(j, "beta2", a.beta2);
  read_key(j, "eps", a.eps);
  return a;
}

json config_json(const TrainConfig& c) {
  const GeneratorConfig& g = c.generator;
  const DiscriminatorConfig& d = c.discriminator;
  return json{
      {"schema_version", kConfigSchemaVersion},
      {"generator",
       {{"height", g.height},
        {"width", g.width},
        {"stem_width", g.stem_width},
        {"stage_widths", g.stage_widths},
        {"stage_depths", g.stage_depths},
        {"bottleneck_depth", g.bottleneck_depth},
        {"bottleneck_width", g.bottleneck_width},
        {"head_width", g.head_width},
        {"d_max", g.d_max},
        {"initial_depth", g.initial_depth},
        {"leaky_slope", g.leaky_slope},
        {"bn_eps", g.bn_eps},
        {"bn_momentum", g.bn_momentum},
        {"spectral_norm", g.spectral_norm},
        {"seed", g.seed}}},
      {"discriminator",
       {{"widths", d.widths},
        {"leaky_slope", d.leaky_slope},
        {"in_eps", d.in_eps},
        {"d_max", d.d_max},
        {"spectral_norm", d.spectral_norm},
        {"seed", d.seed}}},
      {"generator_adam", adam_json(c.generator_adam)},
      {"discriminator_adam", adam_json(c.discriminator_adam)},
      {"loss", {{"lambda_gan", c.loss.gan}, {"lambda_depth", c.loss.depth}}},
      {"discriminator_steps", c.discriminator_steps},
      {"ema_decay", c.ema_decay},
  };
}

TrainConfig config_from(const json& j) {
  if (!j.is_object()) fail_invalid("training config must be a JSON object");
  reject_unknown(j,
                 {"schema_version", "generator", "discriminator", "generator_adam", "discriminator_adam", "loss",
                  "discriminator_steps", "ema_decay"},
                 "config");
  if (j.contains("schema_version") && j.at("schema_version").get<int>() != kConfigSchemaVersion) {
    fail_invalid("unsupported config schema version");
  }
  TrainConfig c;
  if (j.contains("generator")) {
    const json& g = j.at("generator");
    reject_unknown(g,
                   {"height", "width", "stem_width", "stage_widths", "stage_depths", "bottleneck_depth",
                    "bottleneck_width", "head_width", "d_max", "initial_depth", "leaky_slope", "bn_eps",
                    "bn_momentum", "spectral_norm", "seed"},
                   "generator");
    GeneratorConfig& o = c.generator;
    read_key(g, "height", o.height);
    read_key(g, "width", o.width);
    read_key(g, "stem_width", o.stem_width);
    read_key(g, "stage_widths", o.stage_widths);
    read_key(g, "stage_depths", o.stage_depths);
    read_key(g, "bottleneck_depth", o.bottleneck_depth);
    read_key(g, "bottleneck_width", o.bottleneck_width);
    read_key(g, "head_width", o.head_width);
    read_key(g, "d_max", o.d_max);
    read_key(g, "initial_depth", o.initial_depth);
    read_key(g, "leaky_slope", o.leaky_slope);
    read_key(g, "bn_eps", o.bn_eps);
    read_key(g, "bn_momentum", o.bn_momentum);
    read_key(g, "spectral_norm", o.spectral_norm);
    read_key(g, "seed", o.seed);
  }
  if (j.contains("discriminator")) {
    const json& d = j.at("discriminator");
    reject_unknown(d, {"widths", "leaky_slope", "in_eps", "d_max", "spectral_norm", "seed"}, "discriminator");
    DiscriminatorConfig& o = c.discriminator;
    read_key(d, "widths", o.widths);
    read_key(d, "leaky_slope", o.leaky_slope);
    read_key(d, "in_eps", o.in_eps);
    read_key(d, "d_max", o.d_max);
    read_key(d, "spectral_norm", o.spectral_norm);
    read_key(d, "seed", o.seed);
  }
  if (j.contains("generator_adam")) c.generator_adam = adam_from(j.at("generator_adam"), c.generator_adam, "adam");
  if (j.contains("discriminator_adam")) {
    c.discriminator_adam = adam_from(j.at("discriminator_adam"), c.discriminator_adam, "adam");
  }
  if (j.contains("loss")) {
    const json& l = j.at("loss");
    reject_unknown(l, {"lambda_gan", "lambda_depth"}, "loss");
    read_key(l, "lambda_gan", c.loss.gan);
    read_key(l, "lambda_depth", c.loss.depth);
  }
  read_key(j, "discriminator_steps", c.discriminator_steps);
  read_key(j, "ema_decay", c.ema_decay);
  c.generator.validate();
  c.discriminator.validate();
  return c;
}

// Every serialized tensor of a trainer, in a fixed order.
template <typename T>
std::vector<std::pair<std::string, Tensor<T>*>> slots(Trainer<T>& tr) {
  std::vector<std::pair<std::string, Tensor<T>*>> out;
  Generator<T>& g = tr.generator();
  Discriminator<T>& d = tr.discriminator();
  for (Parameter<T>* p : g.params().all()) out.emplace_back("gen/" + p->name, &p->value);
  for (Parameter<T>* p : g.params().all()) out.emplace_back("gen_ema/" + p->name, &p->shadow);
  for (BatchNormLayer<T>* bn : g.norm_layers()) {
    out.emplace_back("gen_bn/" + bn->name() + ".running_mean", &bn->stats().running_mean);
    out.emplace_back("gen_bn/" + bn->name() + ".running_var", &bn->stats().running_var);
  }
  for (ConvLayer<T>* c : g.conv_layers()) {
    if (!c->spectral()) continue;
    out.emplace_back("gen_sn/" + c->name() + ".u", &c->spectral_state().u);
    out.emplace_back("gen_sn/" + c->name() + ".v", &c->spectral_state().v);
    out.emplace_back("gen_ema_sn/" + c->name() + ".u", &c->shadow_spectral_state().u);
    out.emplace_back("gen_ema_sn/" + c->name() + ".v", &c->shadow_spectral_state().v);
  }
  for (Parameter<T>* p : d.params().all()) out.emplace_back("disc/" + p->name, &p->value);
  for (ConvLayer<T>* c : d.conv_layers()) {
    if (!c->spectral()) continue;
    out.emplace_back("disc_sn/" + c->name() + ".u", &c->spectral_state().u);
    out.emplace_back("disc_sn/" + c->name() + ".v", &c->spectral_state().v);
  }
  auto add_adam = [&](const std::string& prefix, Adam<T>& opt, ParameterStore<T>& store) {
    const auto params = store.all();
    for (std::size_t i = 0; i < params.size(); ++i) {
      out.emplace_back(prefix + "_m/" + params[i]->name, &opt.first_moments()[i]);
      out.emplace_back(prefix + "_v/" + params[i]->name, &opt.second_moments()[i]);
    }
  };
  add_adam("gen_adam", tr.generator_optimizer(), g.params());
  add_adam("disc_adam", tr.discriminator_optimizer(), d.params());
  return out;
}

template <typename T>
std::unique_ptr<Trainer<T>> read_body(std::ifstream& in, const json& header);

}  // namespace

std::string train_config_to_json(const TrainConfig& config) { return config_json(config).dump(2); }

TrainConfig train_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail_invalid(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return config_from(j);
  } catch (const json::exception& e) {
    fail_invalid(std::string("config has a wrongly typed value: ") + e.what());
  }
}

template <typename T>
void save_checkpoint(const std::string& path, Trainer<T>& trainer) {
  const auto all = slots(trainer);
  json index = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : all) {
    index.push_back(json{{"name", name}, {"shape", t->shape()}, {"offset", offset}, {"count", t->size()}});
    offset += t->size();
  }
  const json header{{"format", "gforge-checkpoint"},
                    {"version", kCheckpointVersion},
                    {"dtype", "f64"},
                    {"config", config_json(trainer.config())},
                    {"step", trainer.step()},
                    {"generator_adam_steps", trainer.generator_optimizer().steps()},
                    {"discriminator_adam_steps", trainer.discriminator_optimizer().steps()},
                    {"blobs", index}};
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_io("cannot write checkpoint " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::uint32_t version = kCheckpointVersion;
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, t] : all) {
    std::vector<double> buf(t->values().begin(), t->values().end());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
  }
  if (!out) fail_io("failed writing checkpoint " + path);
}

template <typename T>
std::unique_ptr<Trainer<T>> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io("cannot open checkpoint " + path);
  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t len = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) fail_invalid(path + " is not a checkpoint");
  if (version != kCheckpointVersion) fail_invalid("unsupported checkpoint version " + std::to_string(version));
  if (len > (1ull << 30)) fail_invalid("checkpoint header is implausibly large");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) fail_invalid("truncated checkpoint header");
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    fail_invalid(std::string("corrupt checkpoint header: ") + e.what());
  }
  try {
    return read_body<T>(in, header);
  } catch (const json::exception& e) {
    fail_invalid(std::string("corrupt checkpoint header: ") + e.what());
  }
}

namespace {

template <typename T>
std::unique_ptr<Trainer<T>> read_body(std::ifstream& in, const json& header) {
  auto trainer = std::make_unique<Trainer<T>>(config_from(header.at("config")));
  trainer->set_step(header.at("step").get<std::int64_t>());
  trainer->generator_optimizer().set_steps(header.at("generator_adam_steps").get<std::int64_t>());
  trainer->discriminator_optimizer().set_steps(header.at("discriminator_adam_steps").get<std::int64_t>());

  std::map<std::string, json> entries;
  for (const json& e : header.at("blobs")) entries[e.at("name").get<std::string>()] = e;
  const std::streamoff data_start = in.tellg();
  for (const auto& [name, t] : slots(*trainer)) {
    auto it = entries.find(name);
    if (it == entries.end()) fail_invalid("checkpoint is missing tensor " + name);
    const Shape shape = it->second.at("shape").template get<Shape>();
    if (shape != t->shape()) {
      fail_invalid("checkpoint tensor " + name + " has shape " + shape_string(shape) + ", expected " +
                   shape_string(t->shape()));
    }
    const auto offset = it->second.at("offset").template get<std::uint64_t>();
    std::vector<double> buf(t->size());
    in.seekg(data_start + static_cast<std::streamoff>(offset * sizeof(double)));
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
    if (!in) fail_invalid("truncated checkpoint data for " + name);
    for (std::size_t i = 0; i < buf.size(); ++i) (*t)[i] = static_cast<T>(buf[i]);
  }
  return trainer;
}

}  // namespace

template void save_checkpoint<float>(const std::string&, Trainer<float>&);
template void save_checkpoint<double>(const std::string&, Trainer<double>&);
template std::unique_ptr<Trainer<float>> load_checkpoint<float>(const std::string&);
template std::unique_ptr<Trainer<double>> load_checkpoint<double>(const std::string&);

}  // namespace gforge::nn
