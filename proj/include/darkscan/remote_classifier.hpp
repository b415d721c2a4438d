#pragma once

#include <span>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "darkscan/errors.hpp"
#include "darkscan/text_analysis.hpp"

namespace darkscan {

// Adapter for an out-of-process scorer speaking JSON over HTTP:
// POST {"tokens":[...]} to `path`, expecting {"score": s}. Timeouts and
// non-2xx responses surface as classifier-unavailable errors carrying the
// descriptor. One connection per call, so concurrent scoring is safe.
class RemoteClassifier final : public DeceptiveLanguageClassifier {
public:
    RemoteClassifier(std::string host, int port, std::string path = "/score",
                     int timeout_ms = 2000)
        : host_(std::move(host)), port_(port), path_(std::move(path)), timeout_ms_(timeout_ms) {}

    double score(std::span<const std::string> tokens) const override {
        const auto d = descriptor();
        httplib::Client client(host_, port_);
        client.set_connection_timeout(0, timeout_ms_ * 1000);
        client.set_read_timeout(0, timeout_ms_ * 1000);

        nlohmann::json body;
        body["tokens"] = std::vector<std::string>(tokens.begin(), tokens.end());
        auto res = client.Post(path_, body.dump(), "application/json");
        if (!res) {
            throw ClassifierError("remote classifier unreachable", d.name, d.version);
        }
        if (res->status < 200 || res->status >= 300) {
            throw ClassifierError("remote classifier returned HTTP " +
                                      std::to_string(res->status),
                                  d.name, d.version);
        }
        nlohmann::json reply;
        try {
            reply = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception&) {
            throw ClassifierError("remote classifier returned malformed JSON", d.name, d.version);
        }
        if (!reply.contains("score") || !reply["score"].is_number()) {
            throw ClassifierError("remote classifier reply lacks a numeric 'score'", d.name,
                                  d.version);
        }
        return reply["score"].get<double>();
    }

    ClassifierDescriptor descriptor() const override {
        return {"remote", host_ + ":" + std::to_string(port_) + path_};
    }

private:
    std::string host_;
    int port_;
    std::string path_;
    int timeout_ms_;
};

}  // namespace darkscan
