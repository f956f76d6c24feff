#pragma once

#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace loadcast {

/// Error type thrown by every module; `what()` carries a "context: detail" message.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

template <typename... Parts>
std::string concat(Parts&&... parts) {
    std::ostringstream os;
    (os << ... << std::forward<Parts>(parts));
    return os.str();
}

} // namespace detail

template <typename... Parts>
[[noreturn]] void raise(Parts&&... parts) {
    throw Error(detail::concat(std::forward<Parts>(parts)...));
}

template <typename... Parts>
void require(bool condition, Parts&&... parts) {
    if (!condition) {
        raise(std::forward<Parts>(parts)...);
    }
}

} // namespace loadcast
