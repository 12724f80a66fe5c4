#include "hunt/connector.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <thread>

#include "hunt/encode.hpp"
#include "hunt/error.hpp"
#include "hunt/rng.hpp"

namespace hunt {

namespace {

constexpr int kPollMs = 50;

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

class FileTailStream : public EventStream {
public:
    explicit FileTailStream(FileTail spec) : spec_(std::move(spec)) {
        fd_ = ::open(spec_.path.c_str(), O_RDONLY);
        if (fd_ < 0) throw IoError("cannot open '" + spec_.path.string() + "': " + std::strerror(errno));
    }
    ~FileTailStream() override {
        if (fd_ >= 0) ::close(fd_);
    }

    std::optional<LogEvent> next() override {
        auto idle_since = std::chrono::steady_clock::now();
        for (;;) {
            if (stopped_) return std::nullopt;
            if (auto line = take_line()) return LogEvent{std::move(*line), now_seconds()};
            char chunk[65536];
            const auto n = ::read(fd_, chunk, sizeof chunk);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw IoError("read failed on '" + spec_.path.string() + "': " + std::strerror(errno));
            }
            if (n > 0) {
                buffer_.append(chunk, static_cast<std::size_t>(n));
                idle_since = std::chrono::steady_clock::now();
                continue;
            }
            // End of the current file content.
            const bool idle = spec_.idle_timeout.count() > 0 &&
                              std::chrono::steady_clock::now() - idle_since >= spec_.idle_timeout;
            if (!spec_.follow || idle) {
                if (buffer_.empty()) return std::nullopt;
                auto rest = strip_cr(std::move(buffer_));
                buffer_.clear();
                if (rest.empty()) return std::nullopt;
                return LogEvent{std::move(rest), now_seconds()};
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(kPollMs));
        }
    }

    void stop() override { stopped_ = true; }

private:
    std::optional<std::string> take_line() {
        for (;;) {
            const auto nl = buffer_.find('\n', scan_);
            if (nl == std::string::npos) {
                scan_ = buffer_.size();
                return std::nullopt;
            }
            auto line = strip_cr(buffer_.substr(0, nl));
            buffer_.erase(0, nl + 1);
            scan_ = 0;
            if (!line.empty()) return line;
        }
    }

    FileTail spec_;
    int fd_ = -1;
    std::string buffer_;
    std::size_t scan_ = 0;
    std::atomic<bool> stopped_{false};
};

} // namespace

class TcpStream : public EventStream {
public:
    explicit TcpStream(TcpListen spec) : spec_(std::move(spec)) {
        listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (listen_fd_ < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
        const int one = 1;
        ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(spec_.port);
        if (::inet_pton(AF_INET, spec_.host.c_str(), &addr.sin_addr) != 1) {
            ::close(listen_fd_);
            throw IoError("invalid listen address '" + spec_.host + "'");
        }
        if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 16) < 0) {
            const std::string err = std::strerror(errno);
            ::close(listen_fd_);
            throw IoError("cannot listen on " + spec_.host + ":" + std::to_string(spec_.port) + ": " + err);
        }
        socklen_t len = sizeof addr;
        ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
        port_ = ntohs(addr.sin_port);
    }

    ~TcpStream() override {
        for (const auto& c : clients_) ::close(c.fd);
        if (listen_fd_ >= 0) ::close(listen_fd_);
    }

    std::uint16_t port() const noexcept { return port_; }

    std::optional<LogEvent> next() override {
        for (;;) {
            if (!ready_.empty()) {
                auto line = std::move(ready_.front());
                ready_.pop_front();
                return LogEvent{std::move(line), now_seconds()};
            }
            if (stopped_) return std::nullopt;
            if (spec_.end_after_producers > 0 && closed_ >= spec_.end_after_producers && clients_.empty()) {
                return std::nullopt;
            }
            poll_once();
        }
    }

    void stop() override { stopped_ = true; }

private:
    struct Client {
        int fd;
        std::string buffer;
    };

    void poll_once() {
        std::vector<pollfd> fds;
        fds.push_back({listen_fd_, POLLIN, 0});
        for (const auto& c : clients_) fds.push_back({c.fd, POLLIN, 0});
        const int rc = ::poll(fds.data(), fds.size(), kPollMs);
        if (rc <= 0) return;
        // Read existing clients first so a closing producer's lines precede
        // lines of a connection accepted in the same round.
        std::vector<std::size_t> closed;
        for (std::size_t i = 1; i < fds.size(); ++i) {
            if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
            auto& c = clients_[i - 1];
            char chunk[65536];
            const auto n = ::recv(c.fd, chunk, sizeof chunk, 0);
            if (n > 0) {
                c.buffer.append(chunk, static_cast<std::size_t>(n));
                split_lines(c.buffer);
            } else if (n == 0 || (errno != EINTR && errno != EAGAIN)) {
                if (!c.buffer.empty()) {
                    auto rest = strip_cr(std::move(c.buffer));
                    if (!rest.empty()) ready_.push_back(std::move(rest));
                }
                closed.push_back(i - 1);
            }
        }
        for (auto it = closed.rbegin(); it != closed.rend(); ++it) {
            ::close(clients_[*it].fd);
            clients_.erase(clients_.begin() + static_cast<std::ptrdiff_t>(*it));
            ++closed_;
        }
        if (fds[0].revents & POLLIN) {
            const int fd = ::accept(listen_fd_, nullptr, nullptr);
            if (fd >= 0) clients_.push_back({fd, {}});
        }
    }

    void split_lines(std::string& buffer) {
        std::size_t start = 0;
        for (auto nl = buffer.find('\n'); nl != std::string::npos; nl = buffer.find('\n', start)) {
            auto line = strip_cr(buffer.substr(start, nl - start));
            if (!line.empty()) ready_.push_back(std::move(line));
            start = nl + 1;
        }
        buffer.erase(0, start);
    }

    TcpListen spec_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::vector<Client> clients_;
    std::deque<std::string> ready_;
    std::size_t closed_ = 0;
    std::atomic<bool> stopped_{false};
};

std::unique_ptr<EventStream> subscribe(const SourceDescriptor& source) {
    if (const auto* tail = std::get_if<FileTail>(&source)) return std::make_unique<FileTailStream>(*tail);
    return std::make_unique<TcpStream>(std::get<TcpListen>(source));
}

std::uint16_t bound_port(const EventStream& stream) noexcept {
    const auto* tcp = dynamic_cast<const TcpStream*>(&stream);
    return tcp ? tcp->port() : 0;
}

std::optional<LogEvent> MemoryStream::next() {
    if (stopped_ || next_ >= lines_.size()) return std::nullopt;
    return LogEvent{lines_[next_++], now_seconds()};
}

std::optional<ParsedRecord> parse_event(const LogEvent& event, const DatasetProfile& profile, std::string* reason) {
    auto fail = [&](std::string why) -> std::optional<ParsedRecord> {
        if (reason) *reason = std::move(why);
        return std::nullopt;
    };
    const auto doc = nlohmann::json::parse(event.raw, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) return fail("not a JSON object");

    auto to_cell = [](const nlohmann::json& v, Cell& out) {
        if (v.is_null()) {
            out = std::monostate{};
        } else if (v.is_boolean()) {
            out = v.get<bool>();
        } else if (v.is_number_integer()) {
            if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
                out = static_cast<double>(v.get<std::uint64_t>());
            } else {
                out = v.get<std::int64_t>();
            }
        } else if (v.is_number()) {
            out = v.get<double>();
        } else if (v.is_string()) {
            out = v.get<std::string>();
        } else {
            return false;
        }
        return true;
    };

    ParsedRecord rec;
    const auto label = doc.find(profile.label_column);
    if (label == doc.end() || label->is_null()) return fail("missing label '" + profile.label_column + "'");
    if (!to_cell(*label, rec.label)) return fail("label is not a scalar");
    rec.cells.resize(profile.columns.size());
    for (std::size_t i = 0; i < profile.columns.size(); ++i) {
        const auto it = doc.find(profile.columns[i].name);
        if (it == doc.end()) return fail("missing field '" + profile.columns[i].name + "'");
        if (!to_cell(*it, rec.cells[i])) return fail("field '" + profile.columns[i].name + "' is not a scalar");
    }
    return rec;
}

std::vector<std::string> event_lines(const LogTable& table, const DatasetProfile& profile) {
    std::vector<const Column*> cols;
    for (const auto& spec : profile.columns) cols.push_back(table.column(spec.name));
    std::vector<std::string> lines;
    lines.reserve(table.row_count());
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        nlohmann::ordered_json doc = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < cols.size(); ++i) {
            auto& v = doc[profile.columns[i].name];
            const auto* col = cols[i];
            if (!col || col->is_missing(r)) continue; // stays null
            std::visit([&](const auto& values) {
                using T = std::decay_t<decltype(values)>;
                if constexpr (std::is_same_v<T, std::vector<std::uint8_t>>) {
                    v = values[r] != 0;
                } else {
                    v = values[r];
                }
            }, col->values);
        }
        doc[profile.label_column] = table.class_names()[table.labels()[r]];
        lines.push_back(doc.dump());
    }
    return lines;
}

void write_events(const LogTable& table, const DatasetProfile& profile, std::ostream& out) {
    for (const auto& line : event_lines(table, profile)) out << line << '\n';
}

void BatchPolicy::validate() const {
    if (batch_size == 0) throw UsageError("batch size must be positive");
    if (max_pending_batches == 0) throw UsageError("max pending batches must be positive");
    if (trees_per_batch == 0) throw UsageError("trees per batch must be positive");
}

nlohmann::json batch_log_to_json(const BatchLogEntry& entry) {
    return {{"batch_id", entry.batch},
            {"rows", entry.rows},
            {"dropped", entry.dropped},
            {"tree_count_after", entry.tree_count_after}};
}

namespace {

struct PendingBatch {
    std::size_t batch = 0;
    std::size_t rows = 0; // received events in the batch
    FeatureMatrix matrix;
};

class Runner {
public:
    Runner(EventStream& stream, const ForestModel& model, const DatasetProfile& profile,
           const IncrementalOptions& options)
        : stream_(stream), profile_(profile), options_(options), builder_(profile), model_(model) {
        options.policy.validate();
        if (model.encoding.width() == 0) throw DataError("serve: model carries no encoding map");
        const auto names = profile.classes.names();
        benign_ = profile.classes.benign_names();
        for (const auto& name : names) {
            std::string target = name;
            if (options.binary) {
                const bool benign = std::find(benign_.begin(), benign_.end(), name) != benign_.end();
                target = benign ? kBinaryBenign : kBinaryMalicious;
            }
            known_.push_back(std::find(model.class_names.begin(), model.class_names.end(), target) !=
                             model.class_names.end());
        }
        if (options.archive_dir) std::filesystem::create_directories(*options.archive_dir);
    }

    IncrementalResult run() {
        if (options_.single_threaded) {
            receive([&](PendingBatch&& b) { train_one(std::move(b)); });
        } else {
            std::thread trainer([&] { trainer_loop(); });
            try {
                receive([&](PendingBatch&& b) { enqueue(std::move(b)); });
            } catch (...) {
                record_error(std::current_exception());
            }
            {
                std::lock_guard lock(mutex_);
                done_ = true;
            }
            cv_.notify_all();
            trainer.join();
        }
        if (error_) std::rethrow_exception(error_);
        IncrementalResult result;
        result.model = std::move(model_);
        result.log = std::move(log_);
        result.counters = counters_;
        return result;
    }

private:
    template <typename Sink>
    void receive(Sink&& sink) {
        std::size_t formed = 0;
        auto flush = [&] {
            if (builder_.rows() == 0) return;
            PendingBatch b;
            b.batch = ++formed;
            b.rows = builder_.rows();
            auto table = builder_.build();
            if (options_.archive_dir) archive(table, b.batch);
            if (options_.binary) table = amalgamate_binary(table, benign_);
            b.matrix = apply_encoding(table, encoding_);
            sink(std::move(b));
        };
        while (auto event = stream_.next()) {
            if (failed()) break;
            add_counter(&StreamCounters::received, 1);
            std::string reason;
            auto rec = parse_event(*event, profile_, &reason);
            bool accepted = false;
            if (rec) {
                const auto label = resolve_label(rec->label, profile_.classes);
                if (label && known_[*label]) accepted = !builder_.append(rec->cells, rec->label).has_value();
            }
            if (!accepted) {
                add_counter(&StreamCounters::filtered, 1);
                continue;
            }
            if (builder_.rows() >= options_.policy.batch_size) flush();
        }
        if (!failed()) flush();
    }

    void archive(const LogTable& table, std::size_t batch) {
        const auto path = *options_.archive_dir /
                          ("batch-" + std::to_string(batch) + (options_.archive_parquet ? ".parquet" : ".csv"));
        if (options_.archive_parquet) {
            write_parquet(table, profile_, path);
        } else {
            write_csv(table, profile_, path);
        }
    }

    void enqueue(PendingBatch&& b) {
        std::vector<PendingBatch> dropped;
        {
            std::lock_guard lock(mutex_);
            pending_.push_back(std::move(b));
            dropped = maybe_drop_batch(pending_, options_.policy.max_pending_batches,
                                       derive_seed(options_.seed, ++enqueued_));
            for (const auto& d : dropped) {
                counters_.dropped += d.rows;
                append_log({d.batch, d.rows, true, tree_count_});
            }
        }
        cv_.notify_all();
    }

    void trainer_loop() {
        for (;;) {
            PendingBatch b;
            {
                std::unique_lock lock(mutex_);
                cv_.wait(lock, [&] { return done_ || !pending_.empty(); });
                if (pending_.empty()) return;
                b = std::move(pending_.front());
                pending_.pop_front();
            }
            if (failed()) continue;
            try {
                train_one(std::move(b));
            } catch (...) {
                record_error(std::current_exception());
                stream_.stop();
            }
        }
    }

    void train_one(PendingBatch&& b) {
        if (options_.trainer_delay.count() > 0) std::this_thread::sleep_for(options_.trainer_delay);
        FeatureMatrix matrix = std::move(b.matrix);
        if (options_.plan) {
            auto plan = adapt_plan(*options_.plan, matrix, options_.plan_fraction);
            plan.min_class_size = 1;
            plan.seed = derive_seed(options_.plan->seed, b.batch);
            matrix = apply_plan(matrix, plan).first;
        }
        auto next = extend(model_, matrix, options_.policy.trees_per_batch, options_.threads);
        BatchLogEntry entry{b.batch, b.rows, false, next.trees.size()};
        {
            std::lock_guard lock(mutex_);
            model_ = std::move(next);
            tree_count_ = model_.trees.size();
            counters_.trained += b.rows;
            append_log(entry);
        }
        if (options_.on_trained) options_.on_trained(model_, entry);
    }

    // Caller holds mutex_ (or runs single-threaded).
    void append_log(const BatchLogEntry& entry) {
        log_.push_back(entry);
        if (options_.on_log) options_.on_log(entry);
    }

    void add_counter(std::size_t StreamCounters::*field, std::size_t n) {
        std::lock_guard lock(mutex_);
        counters_.*field += n;
    }

    void record_error(std::exception_ptr e) {
        std::lock_guard lock(mutex_);
        if (!error_) error_ = e;
        failed_ = true;
    }
    bool failed() const { return failed_; }

    EventStream& stream_;
    const DatasetProfile& profile_;
    const IncrementalOptions& options_;
    TableBuilder builder_;
    std::vector<std::string> benign_;
    std::vector<bool> known_;
    ForestModel model_;
    EncodingMap encoding_ = model_.encoding;
    std::size_t tree_count_ = model_.trees.size();

    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<PendingBatch> pending_;
    bool done_ = false;
    std::uint64_t enqueued_ = 0;
    std::vector<BatchLogEntry> log_;
    StreamCounters counters_;
    std::exception_ptr error_;
    std::atomic<bool> failed_{false};
};

} // namespace

IncrementalResult run_incremental(EventStream& stream, const ForestModel& model, const DatasetProfile& profile,
                                  const IncrementalOptions& options) {
    Runner runner(stream, model, profile, options);
    return runner.run();
}

} // namespace hunt
