#include "fxlearn/kernels.hpp"

#include <cstdlib>
#include <string>

#include "fxlearn/errors.hpp"

namespace fxl::kernels {

namespace {

enum class Backend { automatic, scalar, avx2 };

Backend g_requested = Backend::automatic;
bool g_requested_set = false;

Backend requested_backend() {
    if (g_requested_set) return g_requested;
    if (const char* env = std::getenv("FXLEARN_KERNELS")) {
        const std::string v(env);
        if (v == "scalar") return Backend::scalar;
        if (v == "avx2") return Backend::avx2;
    }
    return Backend::automatic;
}

template <class T>
const Table<T>& select() {
    switch (requested_backend()) {
        case Backend::scalar:
            return scalar_table<T>();
        case Backend::avx2: {
            const Table<T>* t = avx2_table<T>();
            if (t == nullptr) raise_config("kernel backend avx2 requested but unavailable on this CPU");
            return *t;
        }
        case Backend::automatic:
        default: {
            const Table<T>* t = avx2_table<T>();
            return t != nullptr ? *t : scalar_table<T>();
        }
    }
}

}  // namespace

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

template <class T>
const Table<T>& active() {
    return select<T>();
}

template const Table<float>& active<float>();
template const Table<double>& active<double>();

const char* active_backend_name() { return active<float>().name; }

void force_backend(const std::string& name) {
    if (name == "auto") {
        g_requested = Backend::automatic;
    } else if (name == "scalar") {
        g_requested = Backend::scalar;
    } else if (name == "avx2") {
        if (avx2_table<float>() == nullptr) raise_config("kernel backend avx2 unavailable on this CPU");
        g_requested = Backend::avx2;
    } else {
        raise_config("unknown kernel backend '" + name + "' (expected scalar, avx2 or auto)");
    }
    g_requested_set = true;
}

}  // namespace fxl::kernels
