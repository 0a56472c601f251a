#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spikezip/transformer.hpp"

namespace spikezip {

// On-disk model format: a UTF-8 JSON manifest plus a sidecar blob of raw
// little-endian f64 values, row-major, one contiguous range per named tensor.
// The pairing keeps weights diffable and trivially readable from any
// language.
struct TensorEntry {
  std::string name;
  std::vector<std::size_t> shape;
  std::uint64_t byte_offset = 0;
  std::uint64_t byte_length = 0;
};

struct ModelManifest {
  int format_version = 1;
  std::string kind;  // "ann", "qann" (quantizers present) or "snn" (+ neuron params)
  EncoderConfig config;
  std::uint64_t seed = 0;
  std::string blob_file;  // relative to the manifest's directory
  std::vector<TensorEntry> tensors;
  std::map<std::string, QuantizerSpec> quantizers;
  std::map<std::string, NeuronSite> neurons;
};

EncoderConfig config_from_json_file(const std::string& path);

ModelManifest read_manifest(const std::string& path);
void write_manifest(const ModelManifest& manifest, const std::string& path);

std::vector<double> read_blob(const std::string& path);
void write_blob(const std::string& path, const std::vector<double>& data);

// Raw f64 input tensors use the same blob encoding.
Tensor read_input_blob(const std::string& path, const EncoderConfig& config);
void write_input_blob(const std::string& path, const Tensor& x);

// Writes manifest + blob. The blob file sits next to the manifest and is
// named after it (.manifest -> .blob).
void save_model(const std::string& manifest_path, const ModelWeights& weights,
                std::uint64_t seed, const std::string& kind,
                const std::map<std::string, QuantizerSpec>& quantizers = {},
                const std::map<std::string, NeuronSite>& neurons = {});

struct LoadedModel {
  ModelManifest manifest;
  ModelWeights weights;
};

LoadedModel load_model(const std::string& manifest_path);

QannModel as_qann(const LoadedModel& model);  // requires quantizers
SnnModel as_snn(const LoadedModel& model);    // requires quantizers + neuron params

}  // namespace spikezip
