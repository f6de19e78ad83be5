#pragma once

#include <cmath>
#include <thread>

#include "error.hpp"

namespace shortscribe::extraction {

template <typename Fn>
auto with_retries(const BackendConfig& cfg, Fn&& attempt) -> decltype(attempt()) {
    for (int tries = 0;; ++tries) {
        try {
            return attempt();
        } catch (const Error& e) {
            if (e.code() != ErrorCode::BackendUnavailable || tries >= cfg.retries) throw;
        }
        std::this_thread::sleep_for(cfg.backoff_base * (1LL << std::min(tries, 16)));
    }
}

}  // namespace shortscribe::extraction
