#include "feedback_lab.h"

#include "fbl/config.hpp"
#include "fbl/floquet.hpp"
#include "fbl/lyapunov.hpp"
#include "fbl/model.hpp"
#include "fbl/runner.hpp"
#include "fbl/version.hpp"

#include <cstring>
#include <string>

#define FBL_API __attribute__((visibility("default")))

namespace {

thread_local std::string t_last_error;

fbl_status status_from(fbl::ErrorCode code) {
    using EC = fbl::ErrorCode;
    switch (code) {
        case EC::Ok: return FBL_OK;
        case EC::InvalidParameter:
        case EC::InvalidConeIndex: return FBL_ERR_INVALID_ARGUMENT;
        case EC::DomainViolation: return FBL_ERR_DOMAIN;
        case EC::DimensionMismatch: return FBL_ERR_DIMENSION;
        case EC::NonFiniteValue:
        case EC::SingularMatrix:
        case EC::BlockSplit: return FBL_ERR_NONFINITE;
        case EC::ConfigError: return FBL_ERR_CONFIG;
        case EC::IoError: return FBL_ERR_IO;
        case EC::EmptyCompactSet:
        case EC::TooFewSamples:
        case EC::WindowTooShort:
        case EC::FrameCollapse:
        case EC::GridMismatch:
        case EC::NoDichotomy:
        case EC::NotHyperbolic: return FBL_ERR_ANALYSIS;
        case EC::Internal: return FBL_ERR_INTERNAL;
    }
    return FBL_ERR_INTERNAL;
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

template <typename Fn>
fbl_status guarded(Fn&& fn) {
    try {
        fn();
        return FBL_OK;
    } catch (const fbl::Error& e) {
        t_last_error = e.what();
        return status_from(e.code());
    } catch (const std::exception& e) {
        t_last_error = e.what();
        return FBL_ERR_INTERNAL;
    } catch (...) {
        t_last_error = "unknown error";
        return FBL_ERR_INTERNAL;
    }
}

}  // namespace

struct fbl_model {
    fbl::CyclicVectorField field;
};

extern "C" {

FBL_API const char* fbl_version(void) { return fbl::kVersion; }

FBL_API const char* fbl_last_error(void) { return t_last_error.c_str(); }

FBL_API void fbl_string_free(char* s) { std::free(s); }

FBL_API fbl_status fbl_model_create(const char* model_json, fbl_model** out) {
    if (!model_json || !out) {
        t_last_error = "null argument";
        return FBL_ERR_INVALID_ARGUMENT;
    }
    *out = nullptr;
    return guarded([&] {
        fbl::Json spec;
        try {
            spec = fbl::Json::parse(model_json);
        } catch (const fbl::Json::exception& e) {
            fbl::fail(fbl::ErrorCode::ConfigError, std::string("model JSON parse: ") + e.what());
        }
        auto* m = new fbl_model{fbl::model_from_json(spec)};
        *out = m;
    });
}

FBL_API void fbl_model_destroy(fbl_model* model) { delete model; }

FBL_API int fbl_model_dim(const fbl_model* model) { return model ? model->field.dim() : 0; }

FBL_API fbl_status fbl_model_eval(const fbl_model* model, const double* x, double* fx) {
    if (!model || !x || !fx) {
        t_last_error = "null argument";
        return FBL_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] {
        const int n = model->field.dim();
        const fbl::Vec xv = Eigen::Map<const fbl::Vec>(x, n);
        const fbl::Vec out = model->field.evaluate(xv);
        Eigen::Map<fbl::Vec>(fx, n) = out;
    });
}

FBL_API fbl_status fbl_model_jacobian(const fbl_model* model, const double* x, double* jac) {
    if (!model || !x || !jac) {
        t_last_error = "null argument";
        return FBL_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] {
        const int n = model->field.dim();
        const fbl::Vec xv = Eigen::Map<const fbl::Vec>(x, n);
        const fbl::Mat J = model->field.jacobian(xv);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) jac[r * n + c] = J(r, c);
    });
}

FBL_API fbl_status fbl_model_check_class(const fbl_model* model, int samples,
                                         unsigned long seed, char** report_json) {
    if (!model || !report_json) {
        t_last_error = "null argument";
        return FBL_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] {
        fbl::SampleSpec spec;
        spec.count = samples > 0 ? samples : 1000;
        spec.seed = seed;
        const auto rep = fbl::check_class(model->field, spec);
        *report_json = dup_string(rep.to_json().dump());
    });
}

FBL_API fbl_status fbl_n_value(const fbl_model* model, const double* x, const char* convention,
                               int* value, int* defined) {
    if (!model || !x || !value || !defined) {
        t_last_error = "null argument";
        return FBL_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] {
        const auto conv = convention ? fbl::NConvention::from_name(convention)
                                     : fbl::NConvention::default_convention();
        const fbl::Vec xv = Eigen::Map<const fbl::Vec>(x, model->field.dim());
        const auto nv = fbl::n_value(xv, model->field.signature(), conv);
        *value = nv.value;
        *defined = nv.defined ? 1 : 0;
    });
}

FBL_API fbl_status fbl_n_bounds(const fbl_model* model, const double* x, const char* convention,
                                int* n_min, int* n_max, int* regular) {
    if (!model || !x || !n_min || !n_max || !regular) {
        t_last_error = "null argument";
        return FBL_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] {
        const auto conv = convention ? fbl::NConvention::from_name(convention)
                                     : fbl::NConvention::default_convention();
        const fbl::Vec xv = Eigen::Map<const fbl::Vec>(x, model->field.dim());
        const auto nb = fbl::n_bounds(xv, model->field.signature(), conv);
        *n_min = nb.n_m;
        *n_max = nb.n_M;
        *regular = nb.in_regular_set ? 1 : 0;
    });
}

FBL_API fbl_status fbl_floquet_blocks(const double* matrix, int n, double gap_tol,
                                      char** decomposition_json) {
    if (!matrix || !decomposition_json || n < 3) {
        t_last_error = "null argument or n < 3";
        return FBL_ERR_INVALID_ARGUMENT;
    }
    return guarded([&] {
        fbl::Mat M(n, n);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) M(r, c) = matrix[r * n + c];
        const auto decomp = fbl::invariant_blocks(M, gap_tol > 0 ? gap_tol : 1e-8);
        *decomposition_json = dup_string(decomp.to_json().dump());
    });
}

FBL_API fbl_status fbl_run_command(const char* command, const char* config_json,
                                   const char* overrides_json, const char* out_dir,
                                   char** report_json, int* exit_code) {
    if (!command || !config_json || !out_dir) {
        t_last_error = "null argument";
        return FBL_ERR_INVALID_ARGUMENT;
    }
    try {
        const auto res = fbl::run_command_json(command, config_json,
                                               overrides_json ? overrides_json : "", out_dir);
        if (exit_code) *exit_code = res.exit_code;
        if (report_json) *report_json = dup_string(res.report.dump(2));
        switch (res.exit_code) {
            case 0: return FBL_OK;
            case 2: t_last_error = "invalid config"; return FBL_ERR_CONFIG;
            case 3: t_last_error = "verify suite failed"; return FBL_ERR_VERIFY_FAILED;
            default: t_last_error = "analysis failure"; return FBL_ERR_ANALYSIS;
        }
    } catch (const std::exception& e) {
        t_last_error = e.what();
        if (exit_code) *exit_code = 1;
        return FBL_ERR_INTERNAL;
    }
}

}  // extern "C"
