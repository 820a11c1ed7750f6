from .base import LossWeights, SupervisedBatch, LatentPairBatch, SupervisedLoss
from .supervised import (loss_cat_cross, loss_cat_twin, loss_bin_cross,
                         CatCrossLoss, CatTwinLoss, BinCrossLoss, get_supervised_loss)
from .critic import CriticForm, loss_critic_disc, loss_critic_model, sample_prior_onehots, jsd_from_critic_loss
from .contrastive import (DenominatorAxis, LatentLossResult, loss_infonce, loss_twin_nce,
                          loss_latent_supervised, loss_latent_augment)
from .combined import loss_total
