#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "smi/dataset.hpp"

namespace smi {

// Runs `command <out_path>` through the shell with the labeled ids on
// standard input, one per line, then loads `out_path` as a raw-f32 embedding
// file, normalizing it unless its header says it already is (the rule static
// ingest follows too). A nonzero exit status or an unreadable result is a
// provider error; the child's standard error passes through untouched.
EmbeddingStore refresh_embeddings(const std::string& command, std::span<const PointId> labeled,
                                  const std::filesystem::path& out_path);

}  // namespace smi
