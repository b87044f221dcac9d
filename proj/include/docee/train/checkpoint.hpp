#pragma once

#include <memory>
#include <string>

#include "docee/train/model.hpp"

namespace docee::train {

// Binary model snapshot: a JSON header (config, schema, vocab, parameter
// shapes, Adam step) followed by raw row-major double blobs for every
// parameter's value and Adam moments, in name order.
void save_checkpoint(const std::string& path, const Model& model);

std::unique_ptr<Model> load_checkpoint(const std::string& path);

}  // namespace docee::train
