// Copyright Contributors to the splatlab project
// SPDX-License-Identifier: Apache-2.0
//
// Training checkpoint: model, Adam moments and iteration in one file.
//
//   char[4] magic "SPCK"
//   u32     version
//   u64     iteration
//   u32     active SH degree
//   u32     reserved, zero
//   u64     model byte length, then the model file bytes
//   first moments, then second moments: count x 236-byte records
//
#pragma once

#include "splatlab/io/model_io.hpp"
#include "splatlab/optim/adam.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace splatlab {

inline constexpr char kCheckpointMagic[4] = {'S', 'P', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    SplatModel model;
    AdamMoments<float> moments;
    long iteration = 0;
    int active_sh_degree = 0;
};

inline void save_checkpoint(const std::filesystem::path &path, const Checkpoint &ck) {
    if (ck.moments.size() != ck.model.gaussians.size())
        throw InvalidArgument("checkpoint moments are not aligned with the model");
    std::ostringstream model_bytes(std::ios::binary);
    write_model(model_bytes, ck.model);
    const std::string blob = model_bytes.str();

    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ResourceError("cannot write '" + tmp.string() + "'");
        out.write(kCheckpointMagic, 4);
        detail::put<std::uint32_t>(out, kCheckpointVersion);
        detail::put<std::uint64_t>(out, std::uint64_t(ck.iteration));
        detail::put<std::uint32_t>(out, std::uint32_t(ck.active_sh_degree));
        detail::put<std::uint32_t>(out, 0);
        detail::put<std::uint64_t>(out, blob.size());
        out.write(blob.data(), std::streamsize(blob.size()));
        for (const auto *set : {&ck.moments.first, &ck.moments.second})
            for (const auto &g : *set) {
                const auto r = detail::pack_record(g);
                out.write(reinterpret_cast<const char *>(r.data()), kRecordBytes);
            }
        if (!out) throw ResourceError("checkpoint write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ResourceError("cannot open checkpoint '" + path.string() + "'");
    const std::uint64_t size = std::filesystem::file_size(path);
    auto fail = [&](const std::string &msg) { return FormatError("'" + path.string() + "': " + msg); };
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, kCheckpointMagic, 4) != 0) throw fail("not a checkpoint (bad magic)");
    Checkpoint ck;
    try {
        const auto version = detail::get<std::uint32_t>(in, "version");
        if (version != kCheckpointVersion) throw fail("unsupported checkpoint version " + std::to_string(version));
        ck.iteration = long(detail::get<std::uint64_t>(in, "iteration"));
        ck.active_sh_degree = int(detail::get<std::uint32_t>(in, "sh degree"));
        if (ck.active_sh_degree > kMaxShDegree) throw fail("invalid SH degree");
        detail::get<std::uint32_t>(in, "reserved");
        const auto model_len = detail::get<std::uint64_t>(in, "model length");
        const std::uint64_t header = 4 + 4 + 8 + 4 + 4 + 8;
        if (model_len > size - header) throw fail("truncated checkpoint model");
        std::string blob(std::size_t(model_len), '\0');
        in.read(blob.data(), std::streamsize(model_len));
        std::istringstream model_in(blob, std::ios::binary);
        ck.model = read_model(model_in, model_len);
        const std::size_t n = ck.model.gaussians.size();
        if (size - header - model_len != 2 * n * kRecordBytes) throw fail("moment section size mismatch");
        std::array<float, kRecordFloats> r{};
        for (auto *set : {&ck.moments.first, &ck.moments.second})
            for (std::size_t i = 0; i < n; ++i) {
                in.read(reinterpret_cast<char *>(r.data()), kRecordBytes);
                if (in.gcount() != std::streamsize(kRecordBytes)) throw fail("truncated moments");
                set->push_back(detail::unpack_record(r));
            }
    } catch (const FormatError &e) {
        const std::string what = e.what();
        if (what.rfind("'" + path.string() + "'", 0) == 0) throw;
        throw fail(what);
    }
    return ck;
}

} // namespace splatlab
