#pragma once

#include "gpslam/gp.hpp"
#include "gpslam/grid.hpp"
#include "gpslam/mapstore.hpp"
#include "gpslam/registration.hpp"

#include <cstddef>
#include <string>

namespace gpslam {

enum class InitialGuessMode { Identity, ConstantVelocity };

struct PipelineConfig {
  bool refine_enabled = false;
  // Run refinement on its own thread. When false, batches are refined inline
  // on the caller's thread (single worker).
  bool refine_async = true;
  int refine_batch = 5;  // frames per refinement step
  int core_outer_iters = 5;
  int refine_outer_iters = 10;
  std::size_t refine_queue_capacity = 64;  // oldest batch dropped beyond this
  InitialGuessMode initial_guess_mode = InitialGuessMode::ConstantVelocity;

  void validate() const;
};

struct SlamConfig {
  GridConfig grid;
  KernelConfig kernel;
  MatchConfig match;
  MapConfig map;
  PipelineConfig pipeline;

  void validate() const;
  // Sets one option by its configuration-file key. Throws InvalidArgument
  // for unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
};

// Reads "key = value" lines ('#' comments, blank lines allowed) on top of
// the defaults.
SlamConfig load_config(const std::string& path);
SlamConfig parse_config(const std::string& text, const std::string& source = "<config>");

}  // namespace gpslam
