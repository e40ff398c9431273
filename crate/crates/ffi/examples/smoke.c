#include <stdio.h>
#include "hglearn.h"

int main(void) {
    HglCorpus *corpus = NULL;
    HglModel *model = NULL;
    double weights[HGL_NUM_CONSTRAINTS];
    double acc = 0.0;
    uint8_t order = 0;

    if (hgl_corpus_reference(0, &corpus) != HGL_STATUS_OK) return 1;
    if (hgl_train_perceptron(corpus, 10, 0, &model) != HGL_STATUS_OK) return 2;
    if (hgl_model_weights(model, weights) != HGL_STATUS_OK) return 3;
    if (hgl_predict(model, "f f c", "hg-ml", 2.0, 0.001, 0, &order) != HGL_STATUS_OK) return 4;
    if (hgl_accuracy(model, corpus, "hg-ml", 2.0, 0.001, 0, &acc) != HGL_STATUS_OK) return 5;
    if (hgl_predict(model, "bad", "hg-ml", 2.0, 0.001, 0, &order) != HGL_STATUS_INVALID_ARGUMENT) return 6;
    printf("f f c -> %s\naccuracy %.4f\nerror: %s\n", hgl_order_name(order), acc, hgl_last_error());
    hgl_model_free(model);
    hgl_corpus_free(corpus);
    return 0;
}
