#include "gpslam/pipeline.hpp"

#include "gpslam/error.hpp"
#include "gpslam/registration.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <ostream>

namespace gpslam {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

class HoldPosition final : public InitialGuessProvider {
 public:
  Pose predict(std::span<const TimedPose> history, double) const override {
    return history.back().pose;
  }
};

// Replays the last relative motion.
class ConstantVelocity final : public InitialGuessProvider {
 public:
  Pose predict(std::span<const TimedPose> history, double) const override {
    const Pose& last = history.back().pose;
    if (history.size() < 2) return last;
    const Pose& prev = history[history.size() - 2].pose;
    return last * (prev.inverse() * last);
  }
};

bool is_registration_failure(const Error& e) {
  return e.code() == ErrorCode::NoCorrespondences || e.code() == ErrorCode::DegenerateGeometry;
}

}  // namespace

std::unique_ptr<InitialGuessProvider> make_initial_guess_provider(InitialGuessMode mode) {
  if (mode == InitialGuessMode::Identity) return std::make_unique<HoldPosition>();
  return std::make_unique<ConstantVelocity>();
}

CoreWorkflow::CoreWorkflow(const SlamConfig& cfg, std::unique_ptr<InitialGuessProvider> guess)
    : cfg_(cfg),
      match_(cfg.match),
      guess_(guess ? std::move(guess) : make_initial_guess_provider(cfg.pipeline.initial_guess_mode)),
      map_(cfg.grid, cfg.kernel, cfg.map) {
  cfg_.validate();
  match_.max_outer_iters = cfg.pipeline.core_outer_iters;
}

FrameStats CoreWorkflow::process(FramePacket& frame) {
  FrameStats stats;
  stats.seq = frame.seq;
  const Pose guess =
      trajectory_.empty() ? Pose::identity() : guess_->predict(trajectory_, frame.timestamp);
  Pose pose = guess;

  if (map_.empty()) {
    // First frame (or nothing mapped yet) defines the map.
    const auto t0 = Clock::now();
    GpMap frame_map = reconstruct_cloud(transform(pose, frame.scan), cfg_.grid, cfg_.kernel, cfg_.map);
    stats.t_preprocess_ms = elapsed_ms(t0);
    const auto t1 = Clock::now();
    update_map(map_, frame_map);
    stats.t_update_ms = elapsed_ms(t1);
  } else if (frame.scan.empty()) {
    stats.degenerate = true;
  } else {
    try {
      RegistrationResult reg = register_scan(frame.scan, map_, guess, match_);
      pose = reg.pose;
      stats.t_preprocess_ms = reg.t_preprocess_ms;
      stats.t_match_ms = reg.t_match_ms;
      stats.t_align_ms = reg.t_align_ms;
      stats.correspondences = reg.correspondences;
      stats.outer_iterations = reg.outer_iterations;
      const auto t0 = Clock::now();
      update_map(map_, reg.reconstruction);
      stats.t_update_ms = elapsed_ms(t0);
    } catch (const Error& e) {
      if (!is_registration_failure(e)) throw;
      // Keep the prior and leave the map untouched for this frame.
      stats.degenerate = true;
      pose = guess;
    }
  }
  frame.pose_estimate = pose;
  trajectory_.push_back({frame.timestamp, pose});
  return stats;
}

CoreResult run_core(std::span<const FramePacket> frames, const SlamConfig& cfg) {
  if (frames.empty()) throw Error(ErrorCode::InvalidArgument, "run_core: empty frame stream");
  CoreWorkflow core(cfg);
  CoreResult out;
  for (const auto& f : frames) {
    FramePacket frame = f;
    out.stats.push_back(core.process(frame));
  }
  out.trajectory = core.trajectory();
  out.map = core.take_map();
  return out;
}

RefinementWorkflow::RefinementWorkflow(const SlamConfig& cfg)
    : cfg_(cfg), match_(cfg.match), map_(cfg.grid, cfg.kernel, cfg.map) {
  match_.max_outer_iters = cfg.pipeline.refine_outer_iters;
}

RefinementOutcome RefinementWorkflow::process(const RefinementBatch& batch) {
  RefinementOutcome out{batch.first_seq, batch.last_seq, batch.core_anchor, batch.core_anchor, false};
  if (batch.cloud.empty()) return out;
  if (map_.empty()) {
    map_ = reconstruct_cloud(transform(correction_, batch.cloud), cfg_.grid, cfg_.kernel, cfg_.map);
    out.refined_anchor = correction_ * batch.core_anchor;
    out.ok = true;
    return out;
  }
  try {
    RegistrationResult reg = register_scan(batch.cloud, map_, correction_, match_);
    correction_ = reg.pose;
    update_map(map_, reg.reconstruction);
    out.refined_anchor = correction_ * batch.core_anchor;
    out.ok = true;
  } catch (const Error& e) {
    if (!is_registration_failure(e)) throw;
  }
  return out;
}

RefinementResult run_refinement(std::span<const RefinementBatch> batches, const SlamConfig& cfg) {
  RefinementWorkflow refine(cfg);
  RefinementResult out;
  for (const auto& b : batches) out.outcomes.push_back(refine.process(b));
  out.map = refine.take_map();
  return out;
}

Pose integrate_poses(const Pose& core_at_batch, const Pose& refined_at_batch,
                     const Pose& subsequent_core) {
  return refined_at_batch * (core_at_batch.inverse() * subsequent_core);
}

std::vector<TimedPose> apply_refinement(const std::vector<TimedPose>& core,
                                        std::span<const RefinementOutcome> outcomes) {
  std::vector<TimedPose> out = core;
  for (const auto& o : outcomes) {
    if (!o.ok) continue;
    for (std::uint64_t s = o.first_seq; s <= o.last_seq && s < out.size(); ++s)
      out[s].pose = integrate_poses(o.core_anchor, o.refined_anchor, core[s].pose);
  }
  return out;
}

Pipeline::Pipeline(const SlamConfig& cfg) : cfg_(cfg), core_(cfg) {
  if (!cfg_.pipeline.refine_enabled) return;
  refine_ = std::make_unique<RefinementWorkflow>(cfg_);
  if (cfg_.pipeline.refine_async) worker_ = std::thread([this] { worker_loop(); });
}

Pipeline::~Pipeline() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  wake_.notify_all();
  if (worker_.joinable()) worker_.join();
}

Pose Pipeline::push(FramePacket frame) {
  if (finished_) throw Error(ErrorCode::InvalidArgument, "pipeline already finished");
  if (last_seq_ && (frame.seq != *last_seq_ + 1 || !(frame.timestamp > last_timestamp_)))
    throw Error(ErrorCode::InvalidArgument,
                "frames need contiguous seq and increasing timestamps (seq " +
                    std::to_string(frame.seq) + ")");
  if (!last_seq_ && frame.seq != 0)
    throw Error(ErrorCode::InvalidArgument, "first frame must have seq 0");
  last_seq_ = frame.seq;
  last_timestamp_ = frame.timestamp;

  stats_.push_back(core_.process(frame));

  if (refine_) {
    if (pending_frames_ == 0) pending_.first_seq = frame.seq;
    const PointCloud world = transform(frame.pose_estimate, frame.scan);
    pending_.cloud.insert(pending_.cloud.end(), world.begin(), world.end());
    pending_.last_seq = frame.seq;
    pending_.core_anchor = frame.pose_estimate;
    if (++pending_frames_ == cfg_.pipeline.refine_batch) {
      enqueue(std::move(pending_));
      pending_ = RefinementBatch{};
      pending_frames_ = 0;
    }
    poll_outcomes();
  }
  return live_correction_ * frame.pose_estimate;
}

void Pipeline::enqueue(RefinementBatch batch) {
  if (!cfg_.pipeline.refine_async) {
    outcomes_.push_back(refine_->process(batch));
    return;
  }
  {
    std::lock_guard lock(mutex_);
    if (queue_.size() >= cfg_.pipeline.refine_queue_capacity) {
      queue_.pop_front();
      ++dropped_;
    }
    queue_.push_back(std::move(batch));
  }
  wake_.notify_one();
}

void Pipeline::worker_loop() {
  for (;;) {
    RefinementBatch batch;
    {
      std::unique_lock lock(mutex_);
      wake_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;
      batch = std::move(queue_.front());
      queue_.pop_front();
    }
    RefinementOutcome outcome;
    try {
      outcome = refine_->process(batch);
    } catch (const std::exception&) {
      outcome = {batch.first_seq, batch.last_seq, batch.core_anchor, batch.core_anchor, false};
    }
    std::lock_guard lock(mutex_);
    outcomes_.push_back(outcome);
  }
}

void Pipeline::poll_outcomes() {
  std::unique_lock lock(mutex_, std::defer_lock);
  if (cfg_.pipeline.refine_async) lock.lock();
  for (auto it = outcomes_.rbegin(); it != outcomes_.rend(); ++it) {
    if (it->ok) {
      live_correction_ = it->refined_anchor * it->core_anchor.inverse();
      break;
    }
  }
}

PipelineResult Pipeline::finish() {
  if (finished_) throw Error(ErrorCode::InvalidArgument, "pipeline already finished");
  finished_ = true;
  if (refine_ && pending_frames_ > 0) {
    enqueue(std::move(pending_));
    pending_frames_ = 0;
  }
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  wake_.notify_all();
  if (worker_.joinable()) worker_.join();

  PipelineResult out;
  out.core_trajectory = core_.trajectory();
  out.stats = std::move(stats_);
  out.core_frame_drops = (last_seq_ ? *last_seq_ + 1 : 0) - out.core_trajectory.size();
  if (refine_) {
    std::sort(outcomes_.begin(), outcomes_.end(),
              [](const auto& a, const auto& b) { return a.first_seq < b.first_seq; });
    out.refinement = outcomes_;
    out.dropped_batches = dropped_;
    out.trajectory = apply_refinement(out.core_trajectory, out.refinement);
    out.refined_map = refine_->take_map();
  } else {
    out.trajectory = out.core_trajectory;
  }
  out.core_map = core_.take_map();
  return out;
}

PipelineResult run_pipeline(std::span<const FramePacket> frames, const SlamConfig& cfg) {
  if (frames.empty()) throw Error(ErrorCode::InvalidArgument, "run_pipeline: empty frame stream");
  Pipeline pipeline(cfg);
  for (const auto& f : frames) pipeline.push(f);
  return pipeline.finish();
}

void write_frame_stats(std::span<const FrameStats> stats, std::ostream& out) {
  out << "# seq t_preprocess_ms t_match_ms t_align_ms t_update_ms\n";
  out << std::fixed << std::setprecision(3);
  for (const auto& s : stats)
    out << s.seq << ' ' << s.t_preprocess_ms << ' ' << s.t_match_ms << ' ' << s.t_align_ms << ' '
        << s.t_update_ms << '\n';
}

}  // namespace gpslam
