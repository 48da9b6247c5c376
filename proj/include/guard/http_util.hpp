#pragma once

#include <cmath>

#include <httplib.h>

namespace guard::http_util {

inline void set_timeouts(httplib::Client& client, double seconds) {
    const auto whole = static_cast<time_t>(seconds);
    const auto usec = static_cast<time_t>((seconds - std::floor(seconds)) * 1e6);
    client.set_connection_timeout(whole, usec);
    client.set_read_timeout(whole, usec);
    client.set_write_timeout(whole, usec);
}

}  // namespace guard::http_util
