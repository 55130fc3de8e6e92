#include "dsi/backends/contracts.hpp"

#include "dsi/error.hpp"

namespace dsi {

void register_library(GenerativeBackend& backend, const std::vector<ClassToken>& library) {
    for (const auto& token : library) {
        if (token.embedding.size() != backend.text_embedding_dim()) {
            fail(ErrorCode::DimensionMismatch, "token " + token.token_string + " does not match backend " +
                                                   backend.backend_id() + " dimension");
        }
        backend.register_token(token.token_string, token.embedding);
    }
}

}  // namespace dsi
