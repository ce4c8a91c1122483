#pragma once

#include <string>
#include <vector>

#include "vtc/protocols.hpp"

namespace vtc {

// One training stage's audit record, carried inside the checkpoint header.
struct StageProvenance {
  int stage = 1;
  std::string regime;
  std::string config_digest;
  int epochs = 0;
  double final_loss = 0;
  uint64_t seed = 0;
};

struct LoadedCheckpoint {
  Model model;
  std::vector<StageProvenance> provenance;
  std::string payload_digest;  // fnv1a-64 hex of the float payload bytes
};

// File layout: one JSON header line (format version, model + prompt configs,
// vocabulary, provenance, per-entry name/shape/offset records, payload
// digest) terminated by '\n', then every parameter as little-endian float32
// in sorted-name order.  Round trip is bit-exact.
void save_checkpoint(const std::string& path, const Model& model,
                     const std::vector<StageProvenance>& provenance);

// Throws IntegrityError when the payload does not match its declared digest
// or an entry's payload is missing/short.
LoadedCheckpoint load_checkpoint(const std::string& path);

// Throws VocabError unless both vocabularies are identical (same words, same
// ids, same template and token cap).
void require_same_vocab(const Vocabulary& a, const Vocabulary& b);

}  // namespace vtc
