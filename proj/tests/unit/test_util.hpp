#pragma once

#include <atomic>
#include <filesystem>
#include <string>

#include <unistd.h>

#include <gtest/gtest.h>

#include "dsi/error.hpp"

namespace dsi::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "dsi") {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace dsi::test

/// Expects `stmt` to throw dsi::Error with the given code.
#define EXPECT_DSI_ERROR(stmt, expected)                                                     \
    do {                                                                                     \
        try {                                                                                \
            stmt;                                                                            \
            ADD_FAILURE() << #stmt " did not throw";                                         \
        } catch (const ::dsi::Error& dsi_error_) {                                           \
            EXPECT_EQ(::dsi::to_string(dsi_error_.code()), ::dsi::to_string(expected))       \
                << dsi_error_.what();                                                        \
        }                                                                                    \
    } while (0)
