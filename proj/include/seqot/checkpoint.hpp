#ifndef SEQOT_CHECKPOINT_HPP
#define SEQOT_CHECKPOINT_HPP

#include <string>

#include "seqot/model.hpp"

namespace seqot {

// Versioned binary container: model shape block, then a manifest of named
// tensors with little-endian float64 payloads.
void save_checkpoint(const SeqModel& model, const std::string& path);

// Reads the shape block, builds the model, validates each tensor against
// the declared shapes.
SeqModel load_checkpoint(const std::string& path);

// Loads into an existing model; shapes must match its config.
void load_checkpoint_into(SeqModel& model, const std::string& path);

}  // namespace seqot

#endif  // SEQOT_CHECKPOINT_HPP
