#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fxlearn/optim.hpp"

namespace fxl {

// Checkpoint container: magic "STCK", u32 version, then a flat list of
// records until EOF. Record layout (all little-endian):
//   u32 name_len, name bytes, u32 rank, u32 dims[rank], f32 data[prod(dims)]
// Optimizer state is appended as records under the "opt/" prefix.
struct CheckpointRecord {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::vector<float> values;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(const std::string& path, const std::vector<CheckpointRecord>& records);
std::vector<CheckpointRecord> read_checkpoint(const std::string& path);

template <class T>
std::vector<CheckpointRecord> params_to_records(const std::vector<Parameter<T>>& params) {
    std::vector<CheckpointRecord> recs;
    recs.reserve(params.size());
    for (const auto& p : params) {
        CheckpointRecord r;
        r.name = p.name;
        for (std::size_t d : p.var->value.shape) r.dims.push_back(static_cast<std::uint32_t>(d));
        r.values.resize(p.var->value.size());
        for (std::size_t i = 0; i < r.values.size(); ++i) r.values[i] = static_cast<float>(p.var->value.data[i]);
        recs.push_back(std::move(r));
    }
    return recs;
}

template <class T>
void records_to_params(const std::vector<CheckpointRecord>& recs, std::vector<Parameter<T>>& params) {
    for (auto& p : params) {
        const CheckpointRecord* found = nullptr;
        for (const auto& r : recs) {
            if (r.name == p.name) {
                found = &r;
                break;
            }
        }
        if (!found) raise_io("checkpoint missing parameter '" + p.name + "'");
        if (found->values.size() != p.var->value.size()) {
            raise_io("checkpoint parameter '" + p.name + "' has wrong element count");
        }
        for (std::size_t i = 0; i < found->values.size(); ++i) {
            p.var->value.data[i] = static_cast<T>(found->values[i]);
        }
    }
}

template <class T>
void append_optimizer_records(std::vector<CheckpointRecord>& recs, const std::vector<Parameter<T>>& params,
                              const AdamWState<T>& state) {
    CheckpointRecord t;
    t.name = "opt/t";
    t.dims = {1};
    t.values = {static_cast<float>(state.t)};
    recs.push_back(std::move(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        CheckpointRecord m, v;
        m.name = "opt/m/" + params[i].name;
        v.name = "opt/v/" + params[i].name;
        m.dims = {static_cast<std::uint32_t>(state.m[i].size())};
        v.dims = {static_cast<std::uint32_t>(state.v[i].size())};
        m.values.assign(state.m[i].begin(), state.m[i].end());
        v.values.assign(state.v[i].begin(), state.v[i].end());
        recs.push_back(std::move(m));
        recs.push_back(std::move(v));
    }
}

}  // namespace fxl
