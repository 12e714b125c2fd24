#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "gazeflow/net.hpp"
#include "gazeflow/source.hpp"
#include "gazeflow/wire.hpp"

namespace gazeflow {

/// Live source: binds a TCP port, accepts one client, and reads
/// newline-delimited JSON samples (the wire sample schema). Malformed lines
/// and non-monotone timestamps are skipped and counted; an empty line is
/// ignored; client disconnect ends the stream. One session, one client.
class StreamListenSource : public SampleSource {
public:
    StreamListenSource(const std::string& bind_host, std::uint16_t port) {
        listener_ = net::listen_socket(bind_host, port, 1);
        desc_.name = "listen:" + bind_host + ":" + std::to_string(net::bound_port(listener_));
    }

    std::uint16_t port() const { return net::bound_port(listener_); }

    std::optional<GazeSample> next() override {
        if (!accept_client()) return std::nullopt;
        while (!stop_requested()) {
            const auto line = reader_->next_line();
            if (!line) return std::nullopt;  // disconnect = end of stream
            if (line->empty()) continue;
            nlohmann::json j = nlohmann::json::parse(*line, nullptr, false);
            if (j.is_discarded()) {
                ++skipped_;
                continue;
            }
            auto s = wire::sample_from_json(j);
            if (!s) {
                ++skipped_;
                continue;
            }
            if (last_ts_ && s->timestamp <= *last_ts_) {
                ++skipped_;
                continue;
            }
            last_ts_ = s->timestamp;
            return s;
        }
        return std::nullopt;
    }

    const SourceDescriptor& descriptor() const override { return desc_; }
    std::uint64_t skipped() const override { return skipped_; }

    void request_stop() override {
        SampleSource::request_stop();
        // Unblock accept() or recv().
        listener_.shutdown_both();
        client_.shutdown_both();
    }

private:
    bool accept_client() {
        if (client_.valid()) return true;
        if (stop_requested()) return false;
        const int fd = ::accept(listener_.fd(), nullptr, nullptr);
        if (fd < 0) return false;
        client_ = net::Socket(fd);
        reader_.emplace(client_.fd());
        return true;
    }

    net::Socket listener_;
    net::Socket client_;
    std::optional<net::LineReader> reader_;
    SourceDescriptor desc_{"listen", 0.0};
    std::optional<Timestamp> last_ts_;
    std::uint64_t skipped_ = 0;
};

inline std::unique_ptr<SampleSource> listen_stream(const std::string& bind_host,
                                                   std::uint16_t port) {
    return std::make_unique<StreamListenSource>(bind_host, port);
}

}  // namespace gazeflow
