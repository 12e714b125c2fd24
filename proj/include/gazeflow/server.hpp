#pragma once

#include <sys/time.h>

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "gazeflow/net.hpp"
#include "gazeflow/pipeline.hpp"
#include "gazeflow/wire.hpp"

namespace gazeflow {

struct ServerConfig {
    std::string bind_host = "127.0.0.1";
    std::uint16_t port = 0;                       // 0 = pick a free port
    std::size_t max_client_buffer_bytes = 1 << 20;  // stalled past this = disconnect
    double subscribe_timeout_s = 2.0;             // then the client gets everything
};

/// Newline-delimited-JSON TCP broadcaster. Each connected client gets its own
/// writer thread and bounded byte buffer; a client that cannot keep up is
/// disconnected rather than ever backpressuring the pipeline. The first line
/// a client sends may be {"subscribe":["event","decision",...]}; otherwise it
/// receives every message type.
///
/// Message types: sample, event, metrics, decision, stats. seq is
/// per-connection, post-filter, strictly increasing from 0.
class EventStreamServer : public StreamSink {
public:
    explicit EventStreamServer(ServerConfig config) : config_(std::move(config)) {
        listener_ = net::listen_socket(config_.bind_host, config_.port);
        port_ = net::bound_port(listener_);
        accept_thread_ = std::thread([this] { accept_loop(); });
    }

    ~EventStreamServer() override { shutdown(); }

    std::uint16_t port() const { return port_; }

    // StreamSink — never blocks.
    void publish_sample(const GazeSample& s) override {
        broadcast("sample", wire::sample_to_json(s).dump());
    }
    void publish_event(const GazeEvent& e) override {
        broadcast("event", wire::event_to_json(e).dump());
    }
    void publish_snapshot(const MetricsSnapshot& s) override {
        broadcast("metrics", wire::snapshot_to_json(s).dump());
    }
    void publish_decision(const DifficultyDecision& d) override {
        broadcast("decision", wire::decision_to_json(d).dump());
    }

    /// Free-form stats payload (sent at end of run or periodically).
    void publish_stats(const nlohmann::json& payload) { broadcast("stats", payload.dump()); }

    std::uint64_t clients_disconnected_slow() const {
        std::lock_guard lock(clients_mutex_);
        return slow_disconnects_;
    }

    std::size_t clients_connected() const {
        std::lock_guard lock(clients_mutex_);
        std::size_t n = 0;
        for (const auto& c : clients_)
            if (!c->dead) ++n;
        return n;
    }

    /// Stops accepting, disconnects everyone, joins all threads. Idempotent.
    void shutdown() {
        {
            std::lock_guard lock(clients_mutex_);
            if (stopped_) return;
            stopped_ = true;
        }
        listener_.shutdown_both();  // unblocks accept()
        if (accept_thread_.joinable()) accept_thread_.join();
        listener_.reset();
        std::vector<std::shared_ptr<Client>> clients;
        {
            std::lock_guard lock(clients_mutex_);
            clients = clients_;
        }
        for (auto& c : clients) {
            kill_client(*c);
            if (c->writer.joinable()) c->writer.join();
        }
        {
            std::lock_guard lock(clients_mutex_);
            clients_.clear();
        }
    }

private:
    struct Client {
        net::Socket socket;
        std::set<std::string> subscribed;  // empty = everything
        std::mutex mutex;
        std::condition_variable wake;
        std::deque<std::string> outbox;
        std::size_t outbox_bytes = 0;
        std::uint64_t seq = 0;
        bool ready = false;  // subscription line handled
        bool dead = false;
        std::thread writer;
    };

    void accept_loop() {
        while (true) {
            const int fd = ::accept(listener_.fd(), nullptr, nullptr);
            if (fd < 0) return;  // listener closed
            auto client = std::make_shared<Client>();
            client->socket = net::Socket(fd);
            client->writer = std::thread([this, client] { serve_client(client); });
            std::lock_guard lock(clients_mutex_);
            if (stopped_) {
                kill_client(*client);
                client->writer.join();
                return;
            }
            clients_.push_back(client);
        }
    }

    void serve_client(const std::shared_ptr<Client>& client) {
        read_subscription(*client);
        while (true) {
            std::string line;
            {
                std::unique_lock lock(client->mutex);
                client->wake.wait(lock, [&] { return client->dead || !client->outbox.empty(); });
                if (client->dead) break;
                line = std::move(client->outbox.front());
                client->outbox.pop_front();
                client->outbox_bytes -= line.size();
            }
            if (!net::send_all(client->socket.fd(), line.data(), line.size())) {
                std::lock_guard lock(client->mutex);
                client->dead = true;
                break;
            }
        }
        client->socket.shutdown_both();
    }

    void read_subscription(Client& client) {
        timeval tv{};
        tv.tv_sec = static_cast<time_t>(config_.subscribe_timeout_s);
        tv.tv_usec = static_cast<suseconds_t>(
            (config_.subscribe_timeout_s - static_cast<double>(tv.tv_sec)) * 1e6);
        ::setsockopt(client.socket.fd(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
        net::LineReader reader(client.socket.fd());
        const auto line = reader.next_line();
        std::set<std::string> wanted;
        if (line && !line->empty()) {
            try {
                const auto j = nlohmann::json::parse(*line);
                for (const auto& t : j.at("subscribe")) wanted.insert(t.get<std::string>());
            } catch (const nlohmann::json::exception&) {
                wanted.clear();  // malformed filter: send everything
            }
        }
        std::lock_guard lock(client.mutex);
        client.subscribed = std::move(wanted);
        client.ready = true;
    }

    void broadcast(const char* type, const std::string& payload) {
        std::lock_guard lock(clients_mutex_);
        for (const auto& c : clients_) {
            std::unique_lock lock_client(c->mutex);
            if (c->dead || !c->ready) continue;
            if (!c->subscribed.empty() && !c->subscribed.count(type)) continue;
            // Keys are emitted in sorted order, matching nlohmann's dump.
            std::string line = "{\"payload\":";
            line += payload;
            line += ",\"seq\":";
            line += std::to_string(c->seq++);
            line += ",\"type\":\"";
            line += type;
            line += "\"}\n";
            c->outbox_bytes += line.size();
            c->outbox.push_back(std::move(line));
            if (c->outbox_bytes > config_.max_client_buffer_bytes) {
                c->dead = true;
                c->outbox.clear();
                c->outbox_bytes = 0;
                ++slow_disconnects_;
                c->socket.shutdown_both();
            }
            lock_client.unlock();
            c->wake.notify_one();
        }
    }

    void kill_client(Client& c) {
        {
            std::lock_guard lock(c.mutex);
            c.dead = true;
        }
        c.socket.shutdown_both();
        c.wake.notify_all();
    }

    ServerConfig config_;
    net::Socket listener_;
    std::uint16_t port_ = 0;
    std::thread accept_thread_;
    mutable std::mutex clients_mutex_;
    std::vector<std::shared_ptr<Client>> clients_;
    std::uint64_t slow_disconnects_ = 0;
    bool stopped_ = false;
};

}  // namespace gazeflow
