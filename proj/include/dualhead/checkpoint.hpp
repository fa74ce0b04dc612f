#pragma once

#include "dualhead/dataset.hpp"
#include "dualhead/heads.hpp"

#include <string>
#include <string_view>

namespace dualhead {

// Everything besides parameters that a saved run needs to be reused.
struct CheckpointMeta {
  LabelVocab labels_1;
  LabelVocab labels_2;
  std::string vocab_hash;  // crc32 of the serialized tokenizer vocabulary
  std::size_t max_len = 128;
};

struct LoadedCheckpoint {
  DualHeadModel model;
  CheckpointMeta meta;
};

// File layout: a UTF-8 manifest of "key value" lines ending with a line
// "end", immediately followed by the payload. The manifest lists every
// parameter as "tensor <name> <rank> <dims...> <offset> <bytes>"; the payload
// is the parameters' float64 values, little-endian and row-major, laid out
// back to back in manifest order. Floats in the manifest use hex notation.
std::string serialize_checkpoint(const DualHeadModel& model, const CheckpointMeta& meta = {});
LoadedCheckpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const DualHeadModel& model, const std::string& path, const CheckpointMeta& meta = {});
// Throws IntegrityError on any manifest/payload disagreement; never returns
// a partially populated model.
LoadedCheckpoint load_checkpoint(const std::string& path);

std::string vocab_hash(const std::string& serialized_vocab);

}  // namespace dualhead
