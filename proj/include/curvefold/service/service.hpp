// SPDX-License-Identifier: Apache-2.0
//
// Local design service: a curve store, curve operations, sketching and a
// persistent job queue for generation and restoration runs. DesignService
// answers requests as (status, JSON body) pairs; HttpServer puts it on a
// socket.
#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "curvefold/diffusion/denoiser.hpp"
#include "curvefold/diffusion/schedule.hpp"
#include "curvefold/encoder/encoder.hpp"
#include "curvefold/geometry/curve.hpp"

#include "json.hpp"

namespace curvefold {

/// Name of the environment variable holding the data directory.
inline constexpr const char* kDataDirEnv = "CURVEFOLD_DATA_DIR";

/// $CURVEFOLD_DATA_DIR if set, else "curvefold-data".
std::string default_data_dir();

struct ServiceConfig {
  std::string data_dir = default_data_dir();
  std::size_t workers = 1;
  /// Denoisers addressable by name from job payloads. "oracle" is always
  /// available and needs a "target" backbone in the payload.
  std::map<std::string, DenoiserPtr> denoisers;
  /// Needed by POST /curves/{id}/encode and by jobs asking for encoder labels.
  std::shared_ptr<const EncoderModel> encoder;
  /// Used unless the denoiser carries its own (the toy denoiser does).
  DiffusionSchedule schedule = default_schedule();
  /// Start without worker threads; jobs stay queued until run_pending().
  bool paused = false;
};

struct Response {
  int status = 200;
  nlohmann::json body;
};

enum class JobKind { Generate, MotifGenerate, Restore };
enum class JobStatus { Queued, Running, Done, Failed };

const char* to_string(JobKind k);
const char* to_string(JobStatus s);
/// Throws ValidationError (field "/kind").
JobKind job_kind_from_string(const std::string& s);

struct Job {
  std::string id;
  JobKind kind = JobKind::Generate;
  JobStatus status = JobStatus::Queued;
  /// Submitted payload, never modified after submission.
  nlohmann::json config;
  int progress = 0;
  int total_steps = 0;
  std::string error;
};

class DesignService {
 public:
  /// Creates the data directory if needed and replays the job log; jobs that
  /// were queued or running when the log ended are queued again.
  explicit DesignService(ServiceConfig cfg);
  ~DesignService();
  DesignService(const DesignService&) = delete;
  DesignService& operator=(const DesignService&) = delete;

  /// Routes one request. `path` excludes the query string. Errors come back
  /// as {"error": kind, "message", "field"?} with 404, 405, 409, 422 or 503.
  Response handle(const std::string& method, const std::string& path, const std::string& body);

  /// Runs queued jobs on the calling thread until none is left (for paused
  /// services and tests).
  void run_pending();
  /// Blocks until the job is done or failed, or the timeout passes. Returns
  /// the final status if reached.
  std::optional<JobStatus> wait_for(const std::string& job_id, double timeout_seconds);
  /// Stops the workers after their current job. Idempotent.
  void shutdown();

  const ServiceConfig& config() const { return cfg_; }

 private:
  Response create_curve(const nlohmann::json& body);
  Response get_curve(const std::string& id);
  Response encode_curve_route(const std::string& id);
  Response curve_op(const std::string& id, const std::string& op, const nlohmann::json& body);
  Response create_sketch(const nlohmann::json& body);
  Response submit_job(const nlohmann::json& body);
  Response get_job(const std::string& id);
  Response get_trajectory(const std::string& id);
  Response health();

  std::string store_curve(const Curve& c);
  std::optional<Curve> load_curve(const std::string& id) const;
  nlohmann::json job_json(const Job& j) const;
  void validate_payload(JobKind kind, const nlohmann::json& payload) const;
  void append_log(const nlohmann::json& event);
  void replay_log();
  void set_status(const std::string& id, JobStatus s, const std::string& error = {});
  void execute(const std::string& id);
  void worker_loop();
  std::string result_path(const std::string& id) const;
  std::string trajectory_path(const std::string& id) const;

  ServiceConfig cfg_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  std::map<std::string, Job> jobs_;
  std::deque<std::string> queue_;
  std::uint64_t next_job_ = 1;
  std::uint64_t next_curve_ = 1;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

/// HTTP front end for a DesignService.
class HttpServer {
 public:
  explicit HttpServer(DesignService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds (port 0 picks a free port) and returns the bound port. Throws
  /// Error if binding fails.
  int bind(const std::string& host, int port);
  /// Serves on a background thread.
  void start();
  /// Serves on the calling thread until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Response schemas. Each check throws ValidationError naming the first field
// that does not conform.
void check_error_schema(const nlohmann::json& j);
void check_curve_response_schema(const nlohmann::json& j);
void check_job_schema(const nlohmann::json& j);
void check_trajectory_schema(const nlohmann::json& j);
void check_health_schema(const nlohmann::json& j);

}  // namespace curvefold
