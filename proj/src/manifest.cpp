#include "spikezip/manifest.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <utility>

#include <json.hpp>

namespace spikezip {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Canonical tensor order inside the blob.
std::vector<std::pair<std::string, const Tensor*>> weight_entries(const ModelWeights& m) {
  std::vector<std::pair<std::string, const Tensor*>> out;
  out.emplace_back("embed.w", &m.embed_w);
  out.emplace_back("embed.pos", &m.embed_pos);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    const LayerWeights& w = m.layers[l];
    out.emplace_back(p + "w_q", &w.w_q);
    out.emplace_back(p + "b_q", &w.b_q);
    out.emplace_back(p + "w_k", &w.w_k);
    out.emplace_back(p + "b_k", &w.b_k);
    out.emplace_back(p + "w_v", &w.w_v);
    out.emplace_back(p + "b_v", &w.b_v);
    out.emplace_back(p + "w_o", &w.w_o);
    out.emplace_back(p + "b_o", &w.b_o);
    out.emplace_back(p + "ln1_gamma", &w.ln1_gamma);
    out.emplace_back(p + "ln1_beta", &w.ln1_beta);
    out.emplace_back(p + "ln2_gamma", &w.ln2_gamma);
    out.emplace_back(p + "ln2_beta", &w.ln2_beta);
    out.emplace_back(p + "w_mlp1", &w.w_mlp1);
    out.emplace_back(p + "b_mlp1", &w.b_mlp1);
    out.emplace_back(p + "w_mlp2", &w.w_mlp2);
    out.emplace_back(p + "b_mlp2", &w.b_mlp2);
  }
  out.emplace_back("head.w", &m.head_w);
  out.emplace_back("head.b", &m.head_b);
  return out;
}

std::vector<std::pair<std::string, Tensor*>> weight_slots(ModelWeights& m) {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (auto& [name, tensor] : weight_entries(m))
    out.emplace_back(name, const_cast<Tensor*>(tensor));
  return out;
}

json config_to_json(const EncoderConfig& c) {
  return json{{"n", c.n},          {"d", c.d},           {"heads", c.heads},
              {"d_ff", c.d_ff},    {"layers", c.layers}, {"levels", c.levels},
              {"classes", c.classes}};
}

EncoderConfig config_from_json(const json& j) {
  EncoderConfig c;
  try {
    c.n = j.at("n").get<std::size_t>();
    c.d = j.at("d").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
    c.d_ff = j.at("d_ff").get<std::size_t>();
    c.layers = j.at("layers").get<std::size_t>();
    c.levels = j.at("levels").get<std::size_t>();
    c.classes = j.at("classes").get<std::size_t>();
  } catch (const json::exception& e) {
    throw config_error(std::string("bad encoder config: ") + e.what());
  }
  c.validate();
  return c;
}

json manifest_to_json(const ModelManifest& m) {
  json j;
  j["format_version"] = m.format_version;
  j["kind"] = m.kind;
  j["config"] = config_to_json(m.config);
  j["seed"] = m.seed;
  j["blob"] = m.blob_file;
  json tensors = json::array();
  for (const TensorEntry& e : m.tensors) {
    tensors.push_back(json{{"name", e.name},
                           {"shape", e.shape},
                           {"dtype", "f64"},
                           {"byte_offset", e.byte_offset},
                           {"byte_length", e.byte_length}});
  }
  j["tensors"] = std::move(tensors);
  if (!m.quantizers.empty()) {
    json q;
    for (const auto& [site, spec] : m.quantizers)
      q[site] = json{{"s", spec.s},
                     {"alpha", spec.alpha},
                     {"beta", spec.beta},
                     {"signed", spec.is_signed}};
    j["quantizers"] = std::move(q);
  }
  if (!m.neurons.empty()) {
    json nj;
    for (const auto& [site, site_params] : m.neurons)
      nj[site] = json{{"v_thr", site_params.params.v_thr},
                      {"s_min", site_params.params.s_min},
                      {"s_max", site_params.params.s_max},
                      {"v0", site_params.v0}};
    j["neurons"] = std::move(nj);
  }
  return j;
}

ModelManifest manifest_from_json(const json& j) {
  ModelManifest m;
  try {
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != 1) throw config_error("unsupported manifest format version");
    m.kind = j.at("kind").get<std::string>();
    m.config = config_from_json(j.at("config"));
    m.seed = j.at("seed").get<std::uint64_t>();
    m.blob_file = j.at("blob").get<std::string>();
    for (const json& te : j.at("tensors")) {
      TensorEntry e;
      e.name = te.at("name").get<std::string>();
      e.shape = te.at("shape").get<std::vector<std::size_t>>();
      if (te.at("dtype").get<std::string>() != "f64")
        throw config_error("manifest tensor " + e.name + ": only f64 is supported");
      e.byte_offset = te.at("byte_offset").get<std::uint64_t>();
      e.byte_length = te.at("byte_length").get<std::uint64_t>();
      m.tensors.push_back(std::move(e));
    }
    if (j.contains("quantizers")) {
      for (const auto& [site, sj] : j.at("quantizers").items()) {
        QuantizerSpec spec;
        spec.s = sj.at("s").get<double>();
        spec.alpha = sj.at("alpha").get<long long>();
        spec.beta = sj.at("beta").get<long long>();
        spec.is_signed = sj.at("signed").get<bool>();
        spec.validate();
        m.quantizers[site] = spec;
      }
    }
    if (j.contains("neurons")) {
      for (const auto& [site, sj] : j.at("neurons").items()) {
        NeuronSite ns;
        ns.params.v_thr = sj.at("v_thr").get<double>();
        ns.params.s_min = sj.at("s_min").get<long long>();
        ns.params.s_max = sj.at("s_max").get<long long>();
        ns.v0 = sj.at("v0").get<double>();
        m.neurons[site] = ns;
      }
    }
  } catch (const json::exception& e) {
    throw config_error(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

void validate_sites(const ModelManifest& m) {
  const std::vector<std::string> sites = quantizer_sites(m.config);
  auto known = [&sites](const std::string& s) {
    for (const std::string& site : sites)
      if (site == s) return true;
    return false;
  };
  for (const auto& [site, spec] : m.quantizers)
    if (!known(site)) throw config_error("manifest quantizer for unknown site " + site);
  for (const auto& [site, ns] : m.neurons)
    if (!known(site)) throw config_error("manifest neuron block for unknown site " + site);
}

}  // namespace

EncoderConfig config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw config_error(std::string("config file is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

ModelManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open manifest " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw config_error(std::string("manifest is not valid JSON: ") + e.what());
  }
  ModelManifest m = manifest_from_json(j);
  validate_sites(m);
  return m;
}

void write_manifest(const ModelManifest& manifest, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write manifest " + path);
  out << manifest_to_json(manifest).dump(2) << '\n';
  if (!out) throw io_error("failed writing manifest " + path);
}

std::vector<double> read_blob(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw io_error("cannot open blob " + path);
  const std::streamsize bytes = in.tellg();
  if (bytes % static_cast<std::streamsize>(sizeof(double)) != 0)
    throw io_error("blob " + path + " is not a whole number of f64 values");
  std::vector<double> data(static_cast<std::size_t>(bytes) / sizeof(double));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(data.data()), bytes);
  if (!in) throw io_error("failed reading blob " + path);
  return data;
}

void write_blob(const std::string& path, const std::vector<double>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write blob " + path);
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!out) throw io_error("failed writing blob " + path);
}

Tensor read_input_blob(const std::string& path, const EncoderConfig& config) {
  std::vector<double> data = read_blob(path);
  if (data.size() != config.n * config.d)
    throw config_error("input blob " + path + " does not hold n*d values");
  return Tensor({config.n, config.d}, std::move(data));
}

void write_input_blob(const std::string& path, const Tensor& x) {
  write_blob(path, x.values());
}

void save_model(const std::string& manifest_path, const ModelWeights& weights,
                std::uint64_t seed, const std::string& kind,
                const std::map<std::string, QuantizerSpec>& quantizers,
                const std::map<std::string, NeuronSite>& neurons) {
  weights.validate();
  ModelManifest m;
  m.kind = kind;
  m.config = weights.config;
  m.seed = seed;
  m.quantizers = quantizers;
  m.neurons = neurons;

  fs::path mp(manifest_path);
  fs::path blob = mp;
  blob.replace_extension(".blob");
  m.blob_file = blob.filename().string();

  std::vector<double> data;
  std::uint64_t offset = 0;
  for (const auto& [name, tensor] : weight_entries(weights)) {
    TensorEntry e;
    e.name = name;
    e.shape = tensor->shape();
    e.byte_offset = offset;
    e.byte_length = tensor->size() * sizeof(double);
    offset += e.byte_length;
    m.tensors.push_back(std::move(e));
    data.insert(data.end(), tensor->values().begin(), tensor->values().end());
  }
  write_blob(blob.string(), data);
  write_manifest(m, manifest_path);
}

LoadedModel load_model(const std::string& manifest_path) {
  LoadedModel loaded;
  loaded.manifest = read_manifest(manifest_path);

  const fs::path blob_path = fs::path(manifest_path).parent_path() / loaded.manifest.blob_file;
  const std::vector<double> data = read_blob(blob_path.string());
  const std::uint64_t blob_bytes = data.size() * sizeof(double);

  ModelWeights weights;
  weights.config = loaded.manifest.config;
  weights.layers.resize(weights.config.layers);
  auto slots = weight_slots(weights);
  if (slots.size() != loaded.manifest.tensors.size())
    throw config_error("manifest tensor list does not match the model layout");
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const TensorEntry& e = loaded.manifest.tensors[i];
    if (e.name != slots[i].first)
      throw config_error("manifest tensor order mismatch at " + e.name);
    if (e.byte_offset % sizeof(double) != 0 || e.byte_length % sizeof(double) != 0 ||
        e.byte_offset + e.byte_length > blob_bytes)
      throw config_error("manifest tensor " + e.name + " points outside the blob");
    const std::size_t begin = e.byte_offset / sizeof(double);
    const std::size_t count = e.byte_length / sizeof(double);
    *slots[i].second = Tensor(
        e.shape, std::vector<double>(data.begin() + static_cast<std::ptrdiff_t>(begin),
                                     data.begin() + static_cast<std::ptrdiff_t>(begin + count)));
  }
  weights.validate();
  loaded.weights = std::move(weights);
  return loaded;
}

QannModel as_qann(const LoadedModel& model) {
  if (model.manifest.quantizers.empty())
    throw config_error("model has no quantizers; run calibrate first");
  return QannModel{model.weights, model.manifest.quantizers};
}

SnnModel as_snn(const LoadedModel& model) {
  if (model.manifest.neurons.empty())
    throw config_error("model has no neuron parameters; run convert first");
  return SnnModel{model.weights, model.manifest.quantizers, model.manifest.neurons};
}

}  // namespace spikezip
