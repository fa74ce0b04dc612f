#include "dualhead/checkpoint.hpp"

#include "dualhead/error.hpp"

#include <zlib.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace dualhead {

namespace {

constexpr std::string_view kMagic = "dualhead-checkpoint 1";
constexpr std::string_view kEnd = "\nend\n";

std::uint32_t crc32_of(std::string_view bytes) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

std::string hex32(std::uint32_t value) {
  char buffer[9];
  std::snprintf(buffer, sizeof buffer, "%08x", value);
  return buffer;
}

std::string hex_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%a", value);
  return buffer;
}

std::string escape_label(std::string_view label) {
  static constexpr char hex[] = "0123456789ABCDEF";
  std::string out;
  for (char c : label) {
    const auto byte = static_cast<unsigned char>(c);
    if (byte <= 0x20 || byte == '%' || byte == 0x7f) {
      out.push_back('%');
      out.push_back(hex[byte >> 4]);
      out.push_back(hex[byte & 0xf]);
    } else {
      out.push_back(c);
    }
  }
  return out.empty() ? "%" : out;
}

std::string unescape_label(std::string_view text) {
  if (text == "%") return {};
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '%') {
      if (i + 2 >= text.size()) throw IntegrityError("checkpoint: bad label escape");
      out.push_back(static_cast<char>(std::stoi(std::string(text.substr(i + 1, 2)), nullptr, 16)));
      i += 2;
    } else {
      out.push_back(text[i]);
    }
  }
  return out;
}

void append_le(std::string& out, double value) {
  auto bits = std::bit_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>(bits & 0xff));
    bits >>= 8;
  }
}

double read_le(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(p[i]);
  return std::bit_cast<double>(bits);
}

void write_head(std::ostream& out, const std::string& prefix, const HeadConfig& c) {
  out << prefix << "in_dim " << c.in_dim << '\n'
      << prefix << "mid_dim " << c.mid_dim << '\n'
      << prefix << "reduced_dim " << c.reduced_dim << '\n'
      << prefix << "num_classes " << c.num_classes << '\n'
      << prefix << "dropout1 " << hex_double(c.dropout1) << '\n'
      << prefix << "dropout2 " << hex_double(c.dropout2) << '\n'
      << prefix << "residual " << (c.residual ? 1 : 0) << '\n';
}

struct TensorEntry {
  Shape shape;
  std::size_t offset = 0;
  std::size_t bytes = 0;
};

class Manifest {
 public:
  explicit Manifest(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != kMagic) throw IntegrityError("checkpoint: bad magic line");
    while (std::getline(in, line)) {
      std::istringstream fields(line);
      std::string key;
      fields >> key;
      if (key == "tensor") {
        std::string name;
        std::size_t rank = 0;
        TensorEntry entry;
        fields >> name >> rank;
        entry.shape.resize(rank);
        for (auto& extent : entry.shape) fields >> extent;
        fields >> entry.offset >> entry.bytes;
        if (!fields || name.empty()) throw IntegrityError("checkpoint: malformed tensor line '" + line + "'");
        order_.push_back(name);
        if (!tensors_.emplace(name, std::move(entry)).second) {
          throw IntegrityError("checkpoint: tensor '" + name + "' listed twice");
        }
      } else if (key == "label_1" || key == "label_2") {
        std::string value;
        fields >> value;
        (key == "label_1" ? labels_1_ : labels_2_).push_back(unescape_label(value));
      } else if (!key.empty()) {
        std::string value;
        fields >> value;
        values_[key] = value;
      }
    }
  }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw IntegrityError("checkpoint: manifest lacks '" + key + "'");
    return it->second;
  }
  std::size_t size(const std::string& key) const {
    try {
      return std::stoull(get(key));
    } catch (const std::logic_error&) {
      throw IntegrityError("checkpoint: bad integer for '" + key + "'");
    }
  }
  double real(const std::string& key) const {
    try {
      return std::stod(get(key));
    } catch (const std::logic_error&) {
      throw IntegrityError("checkpoint: bad number for '" + key + "'");
    }
  }
  HeadConfig head(const std::string& prefix) const {
    HeadConfig c;
    c.in_dim = size(prefix + "in_dim");
    c.mid_dim = size(prefix + "mid_dim");
    c.reduced_dim = size(prefix + "reduced_dim");
    c.num_classes = size(prefix + "num_classes");
    c.dropout1 = real(prefix + "dropout1");
    c.dropout2 = real(prefix + "dropout2");
    c.residual = size(prefix + "residual") != 0;
    return c;
  }

  const std::map<std::string, TensorEntry>& tensors() const { return tensors_; }
  const std::vector<std::string>& order() const { return order_; }
  const std::vector<std::string>& labels_1() const { return labels_1_; }
  const std::vector<std::string>& labels_2() const { return labels_2_; }

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, TensorEntry> tensors_;
  std::vector<std::string> order_;
  std::vector<std::string> labels_1_;
  std::vector<std::string> labels_2_;
};

}  // namespace

std::string vocab_hash(const std::string& serialized_vocab) { return hex32(crc32_of(serialized_vocab)); }

std::string serialize_checkpoint(const DualHeadModel& model, const CheckpointMeta& meta) {
  const auto params = model.parameters();
  std::string payload;
  std::ostringstream manifest;
  manifest << kMagic << '\n' << "task " << task_name(model.task) << '\n';
  const auto& e = model.encoder_config;
  manifest << "encoder.vocab_size " << e.vocab_size << '\n'
           << "encoder.hidden " << e.hidden << '\n'
           << "encoder.layers " << e.layers << '\n'
           << "encoder.attn_heads " << e.attn_heads << '\n'
           << "encoder.ffn_dim " << e.ffn_dim << '\n'
           << "encoder.max_positions " << e.max_positions << '\n'
           << "encoder.pooled_dropout_p " << hex_double(e.pooled_dropout_p) << '\n'
           << "encoder.layer_norm_eps " << hex_double(e.layer_norm_eps) << '\n';
  write_head(manifest, "head_1.", model.head_config_1);
  write_head(manifest, "head_2.", model.head_config_2);
  manifest << "max_len " << meta.max_len << '\n'
           << "vocab_hash " << (meta.vocab_hash.empty() ? "-" : meta.vocab_hash) << '\n';
  for (const auto& label : meta.labels_1.labels()) manifest << "label_1 " << escape_label(label) << '\n';
  for (const auto& label : meta.labels_2.labels()) manifest << "label_2 " << escape_label(label) << '\n';
  manifest << "tensor_count " << params.size() << '\n';
  for (const auto& p : params) {
    const auto& shape = p.tensor.shape();
    manifest << "tensor " << p.name << ' ' << shape.size();
    for (auto extent : shape) manifest << ' ' << extent;
    manifest << ' ' << payload.size() << ' ' << p.tensor.size() * sizeof(double) << '\n';
    for (double value : p.tensor.data()) append_le(payload, value);
  }
  manifest << "payload_bytes " << payload.size() << '\n'
           << "payload_crc32 " << hex32(crc32_of(payload)) << '\n'
           << "end\n";
  return manifest.str() + payload;
}

LoadedCheckpoint deserialize_checkpoint(std::string_view bytes) {
  const auto end = bytes.find(kEnd);
  if (end == std::string_view::npos) throw IntegrityError("checkpoint: manifest terminator missing");
  const Manifest manifest(bytes.substr(0, end + 1));
  const auto payload = bytes.substr(end + kEnd.size());

  const auto declared = manifest.size("payload_bytes");
  if (payload.size() != declared) {
    throw IntegrityError("checkpoint: payload holds " + std::to_string(payload.size()) +
                         " bytes, manifest declares " + std::to_string(declared));
  }
  if (hex32(crc32_of(payload)) != manifest.get("payload_crc32")) {
    throw IntegrityError("checkpoint: payload checksum mismatch");
  }
  if (manifest.size("tensor_count") != manifest.tensors().size()) {
    throw IntegrityError("checkpoint: tensor_count disagrees with tensor list");
  }
  std::size_t expected_offset = 0;
  for (const auto& name : manifest.order()) {
    const auto& entry = manifest.tensors().at(name);
    if (entry.offset != expected_offset || entry.bytes != numel(entry.shape) * sizeof(double)) {
      throw IntegrityError("checkpoint: tensor '" + name + "' has inconsistent offset or size");
    }
    expected_offset += entry.bytes;
  }
  if (expected_offset != declared) {
    throw IntegrityError("checkpoint: tensor sizes sum to " + std::to_string(expected_offset) +
                         " bytes, payload declares " + std::to_string(declared));
  }

  EncoderConfig encoder;
  encoder.vocab_size = manifest.size("encoder.vocab_size");
  encoder.hidden = manifest.size("encoder.hidden");
  encoder.layers = manifest.size("encoder.layers");
  encoder.attn_heads = manifest.size("encoder.attn_heads");
  encoder.ffn_dim = manifest.size("encoder.ffn_dim");
  encoder.max_positions = manifest.size("encoder.max_positions");
  encoder.pooled_dropout_p = manifest.real("encoder.pooled_dropout_p");
  encoder.layer_norm_eps = manifest.real("encoder.layer_norm_eps");

  LoadedCheckpoint loaded;
  RngState unused(0);
  try {
    loaded.model = make_model(parse_task(manifest.get("task")), encoder, manifest.head("head_1."),
                              manifest.head("head_2."), unused);
  } catch (const ConfigError& e) {
    throw IntegrityError(std::string("checkpoint: invalid configuration: ") + e.what());
  }

  const auto params = loaded.model.parameters();
  if (params.size() != manifest.tensors().size()) {
    throw IntegrityError("checkpoint: " + std::to_string(manifest.tensors().size()) +
                         " tensors for a model with " + std::to_string(params.size()) + " parameters");
  }
  for (const auto& p : params) {
    auto it = manifest.tensors().find(p.name);
    if (it == manifest.tensors().end()) throw IntegrityError("checkpoint: parameter '" + p.name + "' missing");
    if (it->second.shape != p.tensor.shape()) {
      throw IntegrityError("checkpoint: parameter '" + p.name + "' has shape " +
                           to_string(it->second.shape) + ", model expects " + to_string(p.tensor.shape()));
    }
  }
  for (const auto& p : params) {
    const auto& entry = manifest.tensors().at(p.name);
    Tensor tensor = p.tensor;
    auto& data = tensor.data();
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      data[i] = read_le(payload.data() + entry.offset + static_cast<std::size_t>(i) * sizeof(double));
    }
  }

  loaded.meta.labels_1 = LabelVocab(manifest.labels_1());
  loaded.meta.labels_2 = LabelVocab(manifest.labels_2());
  const auto& hash = manifest.get("vocab_hash");
  loaded.meta.vocab_hash = hash == "-" ? "" : hash;
  loaded.meta.max_len = manifest.size("max_len");
  return loaded;
}

void save_checkpoint(const DualHeadModel& model, const std::string& path, const CheckpointMeta& meta) {
  const auto bytes = serialize_checkpoint(model, meta);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_checkpoint(buffer.str());
}

}  // namespace dualhead
