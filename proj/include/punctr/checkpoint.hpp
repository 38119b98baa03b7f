#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "punctr/errors.hpp"
#include "punctr/model.hpp"

namespace punctr {

namespace detail {

constexpr char kCkptMagic[8] = {'p', 'u', 'n', 'c', 't', 'r', 'c', 'k'};
constexpr std::uint32_t kCkptVersion = 1;

template <typename V>
inline void put(std::ostream& out, const V& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
inline V get(std::istream& in, const std::string& path) {
    V v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(V));
    if (!in) throw DataError("checkpoint truncated: " + path);
    return v;
}

}  // namespace detail

template <typename T>
inline void save_checkpoint(const std::string& path, const ModelParams<T>& params,
                            std::uint64_t vocab_hash) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out.write(detail::kCkptMagic, sizeof(detail::kCkptMagic));
    detail::put(out, detail::kCkptVersion);
    detail::put(out, static_cast<std::uint8_t>(sizeof(T)));

    const ModelConfig& c = params.config;
    for (int v : {c.num_layers, c.d_model, c.num_heads, c.d_ff, c.vocab_size, c.max_positions,
                  c.num_classes})
        detail::put(out, static_cast<std::int32_t>(v));
    detail::put(out, c.dropout_rate);
    detail::put(out, c.seed);
    detail::put(out, vocab_hash);

    auto tensors = const_cast<ModelParams<T>&>(params).tensor_list();
    detail::put(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, mat] : tensors) {
        detail::put(out, static_cast<std::uint16_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        detail::put(out, static_cast<std::uint32_t>(mat->rows()));
        detail::put(out, static_cast<std::uint32_t>(mat->cols()));
        out.write(reinterpret_cast<const char*>(mat->data()),
                  static_cast<std::streamsize>(sizeof(T) * static_cast<std::size_t>(mat->size())));
    }
    if (!out) throw DataError("failed writing checkpoint: " + path);
}

// Element width (4 or 8) stored in a checkpoint, so callers can pick the
// right instantiation before loading.
inline int checkpoint_precision(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, detail::kCkptMagic, sizeof(magic)) != 0)
        throw DataError("not a checkpoint file: " + path);
    const auto version = detail::get<std::uint32_t>(in, path);
    if (version != detail::kCkptVersion)
        throw DataError("unsupported checkpoint version " + std::to_string(version) + ": " + path);
    return static_cast<int>(detail::get<std::uint8_t>(in, path));
}

template <typename T>
inline ModelParams<T> load_checkpoint(const std::string& path, std::uint64_t* vocab_hash_out) {
    if (checkpoint_precision(path) != static_cast<int>(sizeof(T)))
        throw DataError("checkpoint precision mismatch: " + path);
    std::ifstream in(path, std::ios::binary);
    in.seekg(8 + sizeof(std::uint32_t) + sizeof(std::uint8_t));

    ModelConfig c;
    c.num_layers = detail::get<std::int32_t>(in, path);
    c.d_model = detail::get<std::int32_t>(in, path);
    c.num_heads = detail::get<std::int32_t>(in, path);
    c.d_ff = detail::get<std::int32_t>(in, path);
    c.vocab_size = detail::get<std::int32_t>(in, path);
    c.max_positions = detail::get<std::int32_t>(in, path);
    c.num_classes = detail::get<std::int32_t>(in, path);
    c.dropout_rate = detail::get<double>(in, path);
    c.seed = detail::get<std::uint64_t>(in, path);
    const auto vocab_hash = detail::get<std::uint64_t>(in, path);
    if (vocab_hash_out) *vocab_hash_out = vocab_hash;

    ModelParams<T> params = init_params<T>(c, c.seed);
    auto tensors = params.tensor_list();
    const auto count = detail::get<std::uint32_t>(in, path);
    if (count != tensors.size())
        throw DataError("checkpoint tensor count mismatch: " + path);
    for (auto& [name, mat] : tensors) {
        const auto name_len = detail::get<std::uint16_t>(in, path);
        std::string stored(name_len, '\0');
        in.read(stored.data(), name_len);
        if (!in || stored != name)
            throw DataError("checkpoint tensor order mismatch at " + name + ": " + path);
        const auto rows = detail::get<std::uint32_t>(in, path);
        const auto cols = detail::get<std::uint32_t>(in, path);
        if (static_cast<Eigen::Index>(rows) != mat->rows() ||
            static_cast<Eigen::Index>(cols) != mat->cols())
            throw DataError("checkpoint tensor shape mismatch at " + name + ": " + path);
        in.read(reinterpret_cast<char*>(mat->data()),
                static_cast<std::streamsize>(sizeof(T) * static_cast<std::size_t>(mat->size())));
        if (!in) throw DataError("checkpoint truncated: " + path);
    }
    return params;
}

}  // namespace punctr
