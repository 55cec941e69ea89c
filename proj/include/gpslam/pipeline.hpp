#pragma once

#include "gpslam/config.hpp"
#include "gpslam/mapstore.hpp"
#include "gpslam/scene.hpp"

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <vector>

namespace gpslam {

struct FramePacket {
  std::uint64_t seq = 0;
  double timestamp = 0.0;
  PointCloud scan;  // sensor frame
  Pose pose_estimate;
};

// Per-frame wall time of the core workflow, split like the module breakdown
// of the timing report.
struct FrameStats {
  std::uint64_t seq = 0;
  double t_preprocess_ms = 0.0;
  double t_match_ms = 0.0;
  double t_align_ms = 0.0;
  double t_update_ms = 0.0;
  std::size_t correspondences = 0;
  int outer_iterations = 0;
  bool degenerate = false;  // registration failed, initial guess reused
};

// Hook for an external motion prior (e.g. inertial). `history` holds the
// poses of all previous frames, oldest first, never empty.
class InitialGuessProvider {
 public:
  virtual ~InitialGuessProvider() = default;
  virtual Pose predict(std::span<const TimedPose> history, double timestamp) const = 0;
};

std::unique_ptr<InitialGuessProvider> make_initial_guess_provider(InitialGuessMode mode);

// Per-frame scan-to-map odometry. The first frame fixes the world frame and
// seeds the map.
class CoreWorkflow {
 public:
  explicit CoreWorkflow(const SlamConfig& cfg,
                        std::unique_ptr<InitialGuessProvider> guess = nullptr);

  // Registers the frame, fuses it into the map and fills frame.pose_estimate.
  FrameStats process(FramePacket& frame);

  const GpMap& map() const { return map_; }
  GpMap take_map() { return std::move(map_); }
  const std::vector<TimedPose>& trajectory() const { return trajectory_; }

 private:
  SlamConfig cfg_;
  MatchConfig match_;
  std::unique_ptr<InitialGuessProvider> guess_;
  GpMap map_;
  std::vector<TimedPose> trajectory_;
};

struct CoreResult {
  std::vector<TimedPose> trajectory;
  GpMap map;
  std::vector<FrameStats> stats;
};

CoreResult run_core(std::span<const FramePacket> frames, const SlamConfig& cfg);

// Aggregated world-frame cloud of consecutive core frames, with the core
// pose of the last frame as anchor.
struct RefinementBatch {
  std::uint64_t first_seq = 0;
  std::uint64_t last_seq = 0;
  PointCloud cloud;
  Pose core_anchor;
};

struct RefinementOutcome {
  std::uint64_t first_seq = 0;
  std::uint64_t last_seq = 0;
  Pose core_anchor;
  Pose refined_anchor;
  bool ok = false;
};

// Registers aggregated batches against its own map with the larger
// refinement iteration budget and fuses them in.
class RefinementWorkflow {
 public:
  explicit RefinementWorkflow(const SlamConfig& cfg);
  RefinementOutcome process(const RefinementBatch& batch);
  const GpMap& map() const { return map_; }
  GpMap take_map() { return std::move(map_); }

 private:
  SlamConfig cfg_;
  MatchConfig match_;
  GpMap map_;
  Pose correction_;  // latest world correction, refined = correction * core
};

struct RefinementResult {
  std::vector<RefinementOutcome> outcomes;
  GpMap map;
};

RefinementResult run_refinement(std::span<const RefinementBatch> batches, const SlamConfig& cfg);

// refined_at_batch * core_at_batch^-1 * subsequent_core.
Pose integrate_poses(const Pose& core_at_batch, const Pose& refined_at_batch,
                     const Pose& subsequent_core);

// Applies refinement outcomes to a core trajectory. Frames covered by a
// successful batch take that batch's correction; frames of failed or
// dropped batches stay uncorrected.
std::vector<TimedPose> apply_refinement(const std::vector<TimedPose>& core,
                                        std::span<const RefinementOutcome> outcomes);

struct PipelineResult {
  std::vector<TimedPose> core_trajectory;
  std::vector<TimedPose> trajectory;  // refined when refinement is enabled
  GpMap core_map;
  std::optional<GpMap> refined_map;
  std::vector<FrameStats> stats;
  std::vector<RefinementOutcome> refinement;
  std::size_t dropped_batches = 0;
  std::size_t core_frame_drops = 0;
};

/// Two-worker pipeline: the caller's thread runs the core workflow through
/// push(); refinement batches travel by value over a bounded queue to a
/// refinement worker (or are processed inline when refine_async is off).
/// When the queue is full the oldest batch is dropped, never a core frame.
class Pipeline {
 public:
  explicit Pipeline(const SlamConfig& cfg);
  ~Pipeline();
  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  // Frames must arrive with contiguous seq and increasing timestamps.
  // Returns the live pose: the core estimate with the latest refinement
  // correction received so far applied.
  Pose push(FramePacket frame);
  // Flushes the partial batch, waits for refinement and assembles the result.
  PipelineResult finish();

 private:
  void enqueue(RefinementBatch batch);
  void worker_loop();
  void poll_outcomes();

  SlamConfig cfg_;
  CoreWorkflow core_;
  std::vector<FrameStats> stats_;
  std::optional<std::uint64_t> last_seq_;
  double last_timestamp_ = 0.0;

  RefinementBatch pending_;
  int pending_frames_ = 0;

  std::unique_ptr<RefinementWorkflow> refine_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::deque<RefinementBatch> queue_;
  std::vector<RefinementOutcome> outcomes_;  // guarded by mutex_
  std::size_t dropped_ = 0;                  // guarded by mutex_
  bool stopping_ = false;
  std::thread worker_;
  Pose live_correction_;
  bool finished_ = false;
};

PipelineResult run_pipeline(std::span<const FramePacket> frames, const SlamConfig& cfg);

// Timing report: "seq t_preprocess_ms t_match_ms t_align_ms t_update_ms",
// one line per frame after a '#' header line.
void write_frame_stats(std::span<const FrameStats> stats, std::ostream& out);

}  // namespace gpslam
