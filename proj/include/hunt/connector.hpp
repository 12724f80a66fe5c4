#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "hunt/balance.hpp"
#include "hunt/forest.hpp"
#include "hunt/ingest.hpp"

namespace hunt {

struct LogEvent {
    std::string raw;         // one record, no trailing newline
    double received_at = 0.0; // seconds since the epoch
};

/// Ordered source of events. next() blocks until an event arrives or the
/// source ends; stop() may be called from any thread and makes next() return
/// nullopt promptly.
class EventStream {
public:
    virtual ~EventStream() = default;
    virtual std::optional<LogEvent> next() = 0;
    virtual void stop() = 0;
};

/// Replays a file's lines, then (with follow) waits for appended lines until
/// no data has arrived for idle_timeout (zero waits until stop()).
struct FileTail {
    std::filesystem::path path;
    bool follow = true;
    std::chrono::milliseconds idle_timeout{2000};
};

/// Newline-delimited records over TCP; each connection is one producer. The
/// stream ends after `end_after_producers` connections have closed (zero:
/// only stop() ends it). Port 0 picks an ephemeral port.
struct TcpListen {
    std::uint16_t port = 0;
    std::string host = "127.0.0.1";
    std::size_t end_after_producers = 0;
};

using SourceDescriptor = std::variant<FileTail, TcpListen>;

/// Throws IoError for an unreadable path or a bind failure.
std::unique_ptr<EventStream> subscribe(const SourceDescriptor& source);

class TcpStream;
/// Bound port of a TCP stream (useful with port 0); 0 for other streams.
std::uint16_t bound_port(const EventStream& stream) noexcept;

/// Fixed list of lines, mainly for tests.
class MemoryStream : public EventStream {
public:
    explicit MemoryStream(std::vector<std::string> lines) : lines_(std::move(lines)) {}
    std::optional<LogEvent> next() override;
    void stop() override { stopped_ = true; }

private:
    std::vector<std::string> lines_;
    std::size_t next_ = 0;
    std::atomic<bool> stopped_{false};
};

struct ParsedRecord {
    std::vector<Cell> cells; // profile column order
    Cell label;
};

/// Parses a JSON-object line and keeps the profile's columns. Returns nullopt
/// (with `reason` set) for malformed lines, a missing label or a missing
/// profile field. Extra keys are ignored.
std::optional<ParsedRecord> parse_event(const LogEvent& event, const DatasetProfile& profile,
                                        std::string* reason = nullptr);

/// One JSON-object line per table row (profile columns plus label, missing
/// cells as null); parse_event reads them back.
std::vector<std::string> event_lines(const LogTable& table, const DatasetProfile& profile);
void write_events(const LogTable& table, const DatasetProfile& profile, std::ostream& out);

struct BatchPolicy {
    std::size_t batch_size = 1000;
    std::size_t max_pending_batches = 4;
    std::size_t trees_per_batch = 10;

    void validate() const;
};

struct BatchLogEntry {
    std::size_t batch = 0; // formation order, from 1
    std::size_t rows = 0;
    bool dropped = false;
    std::size_t tree_count_after = 0;
};

nlohmann::json batch_log_to_json(const BatchLogEntry& entry);

/// Event accounting: received = trained + dropped + filtered once a run ends.
struct StreamCounters {
    std::size_t received = 0;
    std::size_t trained = 0;
    std::size_t dropped = 0;
    std::size_t filtered = 0;
};

struct IncrementalOptions {
    BatchPolicy policy;
    std::optional<BalancePlan> plan;
    /// Scale applied to the plan's targets for each batch (see adapt_plan).
    double plan_fraction = 1.0;
    /// Map labels to Benign/Malicious before training (binary models).
    bool binary = false;
    std::optional<std::filesystem::path> archive_dir;
    bool archive_parquet = false;
    std::uint64_t seed = 0;
    /// Receive and train on one thread; batches are never dropped.
    bool single_threaded = false;
    /// Pause before each training step (testing back-pressure).
    std::chrono::milliseconds trainer_delay{0};
    std::size_t threads = 0;
    /// Called after each trained batch with the updated model.
    std::function<void(const ForestModel&, const BatchLogEntry&)> on_trained;
    /// Called for every log entry (trained or dropped), in order.
    std::function<void(const BatchLogEntry&)> on_log;
};

struct IncrementalResult {
    ForestModel model;
    std::vector<BatchLogEntry> log;
    StreamCounters counters;
};

/// Batches parsed events, encodes them with the model's frozen encoding and
/// extends the model by trees_per_batch per consumed batch. The receiver never
/// blocks on the trainer: when more than max_pending_batches wait, random
/// batches are dropped. Rows whose class the model lacks are filtered.
IncrementalResult run_incremental(EventStream& stream, const ForestModel& model, const DatasetProfile& profile,
                                  const IncrementalOptions& options);

} // namespace hunt
