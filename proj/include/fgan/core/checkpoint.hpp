#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fgan/core/error.hpp"
#include "fgan/core/module.hpp"

namespace fgan {

/// Contents of a checkpoint file: a kind tag ("gan", "recognizer"), the configuration that
/// built the modules (canonical JSON text) and every named array.
struct CheckpointArchive {
  static constexpr std::uint32_t kVersion = 1;

  std::string kind;
  std::string config;
  std::map<std::string, Tensor> arrays;
};

/// Copies parameters and buffers of each module under "<prefix>/<name>".
void collect_arrays(CheckpointArchive& archive, const std::string& prefix, const Module& module);
/// Restores parameters and buffers; every array must be present with a matching shape.
void restore_arrays(const CheckpointArchive& archive, const std::string& prefix, Module& module);

/// Writes via a temporary file and rename, so readers never observe a partial file.
void write_checkpoint(const CheckpointArchive& archive, const std::filesystem::path& path);
CheckpointArchive read_checkpoint(const std::filesystem::path& path);

/// Throws CheckpointMismatch unless the archive has the expected kind and configuration.
void expect_checkpoint(const CheckpointArchive& archive, const std::string& kind, const std::string& config);

}  // namespace fgan
