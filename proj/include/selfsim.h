#ifndef SELFSIM_H
#define SELFSIM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define SELFSIM_API __attribute__((visibility("default")))
#else
#define SELFSIM_API
#endif

typedef enum {
    SELFSIM_OK = 0,
    SELFSIM_ERR_VALIDATION = 1, /* bad input */
    SELFSIM_ERR_NUMERICAL = 2,  /* solver gave up */
    SELFSIM_ERR_IO = 3,
    SELFSIM_ERR_INTERNAL = 4
} selfsim_status;

/* Message for the last failing call on this thread ("" if none). */
SELFSIM_API const char* selfsim_last_error(void);
SELFSIM_API const char* selfsim_version(void);

typedef struct {
    int d;
    double p, b, sigma;
    double s_c, p_c, alpha_c;
} selfsim_params;

/* Range-checked; SELFSIM_ERR_VALIDATION outside the supercritical range. */
SELFSIM_API selfsim_status selfsim_derive_params(int d, double p, double b, double sigma, selfsim_params* out);
/* Extra sigma restriction for flow experiments. */
SELFSIM_API selfsim_status selfsim_check_flow_sigma(const selfsim_params* mp);

/* Fields: N samples on x_j = -L + 2 L j / N. radial = 1 stores d = 3 data as u = x f(|x|). */
typedef struct selfsim_field selfsim_field;

SELFSIM_API selfsim_status selfsim_field_create(int n, double half_width, int radial, const double* re,
                                                const double* im, selfsim_field** out);
SELFSIM_API selfsim_status selfsim_field_copy(const selfsim_field* f, selfsim_field** out);
SELFSIM_API void selfsim_field_free(selfsim_field* f);
SELFSIM_API int selfsim_field_size(const selfsim_field* f);
SELFSIM_API double selfsim_field_half_width(const selfsim_field* f);
SELFSIM_API int selfsim_field_radial(const selfsim_field* f);
SELFSIM_API double selfsim_field_x(const selfsim_field* f, int j);
SELFSIM_API selfsim_status selfsim_field_values(const selfsim_field* f, double* re, double* im);
/* f <- f + a g */
SELFSIM_API selfsim_status selfsim_field_axpy(selfsim_field* f, double a_re, double a_im, const selfsim_field* g);

typedef enum { SELFSIM_NORM_LP = 0, SELFSIM_NORM_HOM_SOBOLEV = 1, SELFSIM_NORM_WEIGHTED_L2 = 2 } selfsim_norm_kind;

/* param: p for LP, sigma for HOM_SOBOLEV, delta for WEIGHTED_L2. radius <= 0 means the whole box. */
SELFSIM_API selfsim_status selfsim_norm(const selfsim_field* f, selfsim_norm_kind kind, double param, double radius,
                                        double* out);
SELFSIM_API selfsim_status selfsim_gagliardo(const selfsim_field* f, double delta, double* out);
SELFSIM_API selfsim_status selfsim_relative_l2_diff(const selfsim_field* a, const selfsim_field* b, double* out);

/* exp(i t Delta_b) f. */
SELFSIM_API selfsim_status selfsim_propagate(const selfsim_field* f, double t, double b, int oversample,
                                             selfsim_field** out);
SELFSIM_API selfsim_status selfsim_propagate_oracle(const selfsim_field* f, double t, double b, selfsim_field** out);
SELFSIM_API selfsim_status selfsim_dispersive_norm(double t, double b, int d, double* out);
SELFSIM_API int selfsim_admissible(double q, double p, int d);
SELFSIM_API selfsim_status selfsim_strichartz(const selfsim_field* f, double q, double p, double b, double t_max,
                                              int n_t, double* integral, int* saturated);

/* Resolvent checks; branch 0 = plus, 1 = minus. */
SELFSIM_API selfsim_status selfsim_inversion_residual(const selfsim_field* f, double z_re, double z_im, int branch,
                                                      double b, double* out);
SELFSIM_API selfsim_status selfsim_identity_residual(const selfsim_field* f, double z_re, double z_im, double z2_re,
                                                     double z2_im, double b, int mixed, double* out);
SELFSIM_API selfsim_status selfsim_sigma_shift(const selfsim_field* f, double z_re, double z_im, double b,
                                               double sigma, double* out);
/* single[i], difference[i] for each lambda; slopes fitted over lambda >= 10. */
SELFSIM_API selfsim_status selfsim_decay_scan(const selfsim_field* f, double y, double b, const double* lambdas,
                                              int n, double* single, double* difference, double* single_slope,
                                              double* difference_slope);

/* Self-similar profile. */
typedef struct selfsim_profile selfsim_profile;

typedef struct {
    double b_star, Q0, c_p;
    double flatness, far_slope, min_abs, objective;
    double residual; /* equation residual / sup|Q| */
    double r_max, h;
    int d;
    double p;
    int iterations;
} selfsim_profile_info;

SELFSIM_API selfsim_status selfsim_profile_find(int d, double p, double q0_lo, double q0_hi, double b_lo,
                                                double b_hi, selfsim_profile** out);
SELFSIM_API selfsim_status selfsim_profile_load(const char* path, selfsim_profile** out);
SELFSIM_API selfsim_status selfsim_profile_save(const selfsim_profile* pr, const char* path);
SELFSIM_API void selfsim_profile_free(selfsim_profile* pr);
SELFSIM_API selfsim_status selfsim_profile_info_get(const selfsim_profile* pr, selfsim_profile_info* out);
/* ValidationError unless |Q| > 0 and the far field is flat. */
SELFSIM_API selfsim_status selfsim_profile_check(const selfsim_profile* pr);
/* Q_b on an N-point box of half width L (d = 3: radial storage). */
SELFSIM_API selfsim_status selfsim_profile_field(const selfsim_profile* pr, int n, double half_width,
                                                 selfsim_field** out);

/* Linearized operator spectrum. */
typedef struct {
    double r_max, h;
    int parity_even; /* 1 even sector, 0 odd */
    int stencil_order;
    double sigma;
    double re_min, re_max, im_min, im_max;
    double loc_threshold, outer_fraction, line_gap;
} selfsim_spectrum_options;

SELFSIM_API void selfsim_spectrum_options_default(selfsim_spectrum_options* o);

typedef struct selfsim_spectrum selfsim_spectrum;

typedef struct {
    int dim, n_values, n_tagged;
    double resonance_residual; /* -1 when not applicable (sigma != 0 or odd d = 1 sector) */
    double j_symmetry;         /* distance / window size */
    double idempotence, commutation;
    int rank, schur_fallback, coarse;
    double biorth_residual;
} selfsim_spectrum_info;

SELFSIM_API selfsim_status selfsim_spectrum_compute(const selfsim_profile* pr, const selfsim_spectrum_options* o,
                                                    selfsim_spectrum** out);
SELFSIM_API void selfsim_spectrum_free(selfsim_spectrum* s);
SELFSIM_API selfsim_status selfsim_spectrum_info_get(const selfsim_spectrum* s, selfsim_spectrum_info* out);
SELFSIM_API selfsim_status selfsim_spectrum_value(const selfsim_spectrum* s, int i, double* re, double* im,
                                                  double* localization, int* tagged);
SELFSIM_API selfsim_status selfsim_spectrum_write(const selfsim_spectrum* s, const char* path);

/* Renormalized flow. */
typedef struct {
    double dtau, tau_end;
    int cadence;
    int sponge;
    double sponge_inner, sponge_outer, sponge_rate;
    double interior;
    int nonlinear;
    int oversample;
    double overflow_tol;
} selfsim_flow_config;

SELFSIM_API void selfsim_flow_config_default(selfsim_flow_config* c);

typedef struct selfsim_series selfsim_series;

/* reference may be NULL (tracks |v| itself). */
SELFSIM_API selfsim_status selfsim_evolve(const selfsim_field* v0, const selfsim_field* reference,
                                          const selfsim_params* mp, const selfsim_flow_config* cfg,
                                          selfsim_series** out);
SELFSIM_API void selfsim_series_free(selfsim_series* s);
SELFSIM_API int selfsim_series_size(const selfsim_series* s);
SELFSIM_API selfsim_status selfsim_series_row(const selfsim_series* s, int i, double* tau, double* hsigma_eps,
                                              double* hsc_v, double* lpc_v);
SELFSIM_API int selfsim_series_aborted(const selfsim_series* s);
SELFSIM_API const char* selfsim_series_note(const selfsim_series* s);
SELFSIM_API selfsim_status selfsim_series_final(const selfsim_series* s, selfsim_field** out);
SELFSIM_API selfsim_status selfsim_series_write_csv(const selfsim_series* s, const char* path);

typedef struct {
    double slope, intercept, r2, slope_lo, slope_hi;
    int n;
} selfsim_fit;

SELFSIM_API selfsim_status selfsim_linear_fit(const double* x, const double* y, int n, int resamples, uint64_t seed,
                                              selfsim_fit* out);

typedef struct {
    selfsim_fit fit;
    double fit_start, fit_end, target_rate;
    int unstable;
    double departure_tau, growth_rate;
    int removed_modes;        /* projected runs only */
    double removed_fraction;
} selfsim_perturb_result;

/* project = 1 removes the tagged modes first (operator on r <= r_op at the field's grid spacing). */
SELFSIM_API selfsim_status selfsim_perturb(const selfsim_profile* pr, const selfsim_field* eps0,
                                           const selfsim_flow_config* cfg, double sigma, int project, double r_op,
                                           uint64_t seed, selfsim_perturb_result* res,
                                           selfsim_series** series);

typedef struct {
    selfsim_fit hsc2, lpc;
    double fit_start, fit_end, growth;
    int plateau, grew_2x;
    double static_hsc2, static_lpc; /* cutoff-norm slopes of the reference profile field */
} selfsim_critnorm_result;

SELFSIM_API selfsim_status selfsim_critnorm(const selfsim_series* s, const selfsim_params* mp,
                                            const selfsim_field* q_ref, uint64_t seed, selfsim_critnorm_result* out);

#ifdef __cplusplus
}
#endif

#endif
