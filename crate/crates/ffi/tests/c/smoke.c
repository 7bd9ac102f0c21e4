#include <math.h>
#include <stdio.h>
#include "qrenyi.h"

int main(void) {
    const double rho_re[4] = {0.8, 0.0, 0.0, 0.2};
    const double sigma_re[4] = {0.7, 0.3, 0.3, 0.3};
    QrDensity *rho = NULL, *sigma = NULL;
    if (qr_density_new(2, rho_re, NULL, &rho) != QR_STATUS_OK) return 2;
    if (qr_density_new(2, sigma_re, NULL, &sigma) != QR_STATUS_OK) return 2;

    double rev = 0.0, h = 0.0, a = 0.0;
    if (qr_reverse_relative_entropy(rho, sigma, &rev) != QR_STATUS_OK) return 3;
    if (qr_hoeffding_exponent(rho, sigma, 0.5 * rev, &h, &a) != QR_STATUS_OK) return 4;
    printf("%.12f %.12f\n", rev, h);

    char msg[128];
    if (qr_petz(rho, sigma, 1.0, &h) != QR_STATUS_INVALID_ARGUMENT) return 5;
    if (qr_last_error_message(msg, sizeof msg) == 0) return 6;

    qr_density_free(rho);
    qr_density_free(sigma);
    return fabs(rev - 0.1985945466212065) < 1e-9 ? 0 : 1;
}
