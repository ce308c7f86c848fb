#pragma once

#include <utility>

#include "diam/error.hpp"

template <typename F>
bool throws_code(diam::ErrorCode code, F&& f) {
    try {
        std::forward<F>(f)();
    } catch (const diam::Error& e) {
        return e.code() == code;
    } catch (...) {
        return false;
    }
    return false;
}
