/* C interface of the neutral-delay Hopf toolkit. All handles are opaque;
 * every call returning nh_status leaves a message in nh_last_error() on
 * failure. Strings returned through char** are owned by the caller and
 * released with nh_string_free. */
#ifndef NH_NH_H
#define NH_NH_H

#include <stddef.h>
#include <stdint.h>

#if defined(NH_BUILDING_LIBRARY)
#define NH_API __attribute__((visibility("default")))
#else
#define NH_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nh_status {
  NH_OK = 0,
  NH_E_MISSING_FIELD,
  NH_E_INVARIANT_VIOLATION,
  NH_E_DIMENSION_MISMATCH,
  NH_E_INVALID_PERMUTATION,
  NH_E_GROUP_TOO_LARGE,
  NH_E_NON_ORTHOGONAL_TABLE,
  NH_E_EQUIVARIANCE_VIOLATION,
  NH_E_MULTIPLE_EIGENVALUES_ON_BLOCK,
  NH_E_SINGULAR_POINT,
  NH_E_DEGENERATE_CROSSING,
  NH_E_NO_CRITICAL_POINTS_IN_RANGE,
  NH_E_HISTORY_UNDERRUN,
  NH_E_DIVERGENCE,
  NH_E_EMPTY_WINDOW,
  NH_E_TOO_FEW_SAMPLES,
  NH_E_PARSE,
  NH_E_IO,
  NH_E_USAGE,
  NH_E_INVALID_ARGUMENT,
  NH_E_INTERNAL
} nh_status;

/* "NH_E_..." name of a status, "NH_OK" for success. */
NH_API const char* nh_status_name(nh_status status);
/* Message of the last failure on the calling thread; "" if none. */
NH_API const char* nh_last_error(void);
NH_API void nh_string_free(char* text);

typedef struct nh_study nh_study;
typedef struct nh_simulation nh_simulation;
typedef struct nh_sweep nh_sweep;

/* Parses a run configuration and decomposes the coupling. */
NH_API nh_status nh_study_load(const char* path, nh_study** out);
NH_API nh_status nh_study_from_json(const char* text, nh_study** out);
NH_API void nh_study_free(nh_study* study);

NH_API nh_status nh_study_set_seed(nh_study* study, uint64_t seed);
/* Overrides simulate.alpha. */
NH_API nh_status nh_study_set_alpha(nh_study* study, double alpha);
NH_API nh_status nh_study_set_epsilon(nh_study* study, double epsilon);
/* Caps sweep workers; 0 means hardware concurrency. */
NH_API nh_status nh_study_set_threads(nh_study* study, unsigned threads);
/* Output directory from the config. */
NH_API const char* nh_study_output_dir(const nh_study* study);

NH_API int nh_study_dimension(const nh_study* study);
NH_API size_t nh_study_group_order(const nh_study* study);

typedef struct nh_component {
  int j;
  int irrep_dim;
  int dim;
  int multiplicity;
  int single_eigenvalue; /* 0 when C has several eigenvalues on the block */
  double mu;
  double a_j;
} nh_component;

NH_API size_t nh_study_component_count(const nh_study* study);
NH_API nh_status nh_study_component(const nh_study* study, size_t index, nh_component* out);
/* Row-major n x n projector of component `index`; `len` must be n * n. */
NH_API nh_status nh_study_projector(const nh_study* study, size_t index, double* out,
                                    size_t len);

/* Scans for critical points; later accessors need this to have succeeded. */
NH_API nh_status nh_study_critical(nh_study* study);

typedef struct nh_critical_point {
  int j;
  int n;
  double alpha;
  double beta;
  double residual;
  double p;
  double q;
  double rho;
  double u_prime;
  int multiplicity;
  int has_crossing_number;
  int crossing_number;
  int unbounded_criterion;
} nh_critical_point;

NH_API size_t nh_study_critical_count(const nh_study* study);
NH_API nh_status nh_study_critical_point(const nh_study* study, size_t index,
                                         nh_critical_point* out);

typedef struct nh_stability {
  double alpha0;
  double beta0;
  int component;
  int hypotheses_pass;
  int steady_state_excluded;
  int established; /* interval (0, alpha0) is certified */
} nh_stability;

NH_API nh_status nh_study_stability(const nh_study* study, nh_stability* out);

typedef struct nh_unbounded {
  int j;
  double lhs;
  double rhs;
  int holds;
} nh_unbounded;

NH_API size_t nh_study_unbounded_count(const nh_study* study);
NH_API nh_status nh_study_unbounded(const nh_study* study, size_t index, nh_unbounded* out);

typedef enum nh_report { NH_REPORT_DECOMPOSE = 0, NH_REPORT_CRITICAL = 1 } nh_report;

/* Structured report as a JSON document. */
NH_API nh_status nh_study_report_json(const nh_study* study, nh_report kind, char** out);
/* Critical-point CSV, written atomically. */
NH_API nh_status nh_study_write_critical_csv(const nh_study* study, const char* path);

/* Runs the configured simulation. Uses the critical scan for the horizon
 * when it has been computed or can be computed. */
NH_API nh_status nh_simulate(nh_study* study, nh_simulation** out);
NH_API void nh_simulation_free(nh_simulation* sim);

typedef struct nh_simulation_summary {
  double alpha;
  double t_end;
  double t_cut;
  double dt;
  size_t samples;
  int oscillating;
  double dominant_frequency;
  double final_sup;
  int decayed;
  int has_nearest;
  int nearest_j;
  int nearest_n;
  double nearest_beta;
  double relative_error;
} nh_simulation_summary;

NH_API nh_status nh_simulation_summary_get(const nh_simulation* sim,
                                           nh_simulation_summary* out);
NH_API size_t nh_simulation_component_count(const nh_simulation* sim);
/* Max and RMS of |P_j x(t)| over the retained window. */
NH_API nh_status nh_simulation_amplitude(const nh_simulation* sim, size_t index, int* j,
                                         double* max, double* rms);
NH_API size_t nh_simulation_samples(const nh_simulation* sim);
NH_API int nh_simulation_dimension(const nh_simulation* sim);
/* Borrowed pointers valid until nh_simulation_free. States are row-major. */
NH_API const double* nh_simulation_times(const nh_simulation* sim);
NH_API const double* nh_simulation_states(const nh_simulation* sim);
NH_API const char* nh_simulation_summary_text(const nh_simulation* sim);

typedef enum nh_format { NH_FORMAT_CSV = 0, NH_FORMAT_BINARY = 1, NH_FORMAT_CONFIG = 2 } nh_format;

/* Full trajectory; NH_FORMAT_CONFIG uses output.trajectory_format. */
NH_API nh_status nh_simulation_write(const nh_simulation* sim, const char* path,
                                     nh_format format);
/* Spectrum of the retained window as CSV (frequency, magnitude). */
NH_API nh_status nh_simulation_write_spectrum(const nh_simulation* sim, const char* path);
NH_API nh_status nh_simulation_report_json(const nh_simulation* sim, char** out);

NH_API nh_status nh_sweep_run(nh_study* study, nh_sweep** out);
NH_API void nh_sweep_free(nh_sweep* sweep);
NH_API size_t nh_sweep_point_count(const nh_sweep* sweep);
NH_API size_t nh_sweep_component_count(const nh_sweep* sweep);

typedef struct nh_sweep_point {
  double alpha;
  double dominant_frequency;
  int oscillating;
  int diverged;
} nh_sweep_point;

NH_API nh_status nh_sweep_point_get(const nh_sweep* sweep, size_t index, nh_sweep_point* out);
/* Max of |P_j x| for component column `component` at grid point `index`. */
NH_API nh_status nh_sweep_amplitude(const nh_sweep* sweep, size_t index, size_t component,
                                    int* j, double* max);
NH_API nh_status nh_sweep_write_csv(const nh_sweep* sweep, const char* path);
NH_API nh_status nh_sweep_report_json(const nh_sweep* sweep, char** out);

#ifdef __cplusplus
}
#endif

#endif
