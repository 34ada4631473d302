"""
Adversarial training of the attentive VQ-VAE.

Each step corrupts a batch of clean images (when a restoration task is set),
reconstructs it, and updates the generator on

    L1(recon, clean) + sum over levels of (codebook + commitment) + adv_weight * g_loss

followed by one discriminator update on the clean batch against the detached
reconstruction. With adv_weight = 0 the discriminator is never updated.

The codebooks are trained by their loss terms only, at codebook_lr_scale
times the generator learning rate.
"""
import collections
import logging
import os
import time
import numpy as np
from arenvq import tensor as T
from arenvq.adversarial import PatchDiscriminator, discriminator_loss, generator_loss
from arenvq.aren import AttentiveVQVAE
from arenvq.checkpoint import save_checkpoint
from arenvq.config import write_config
from arenvq.errors import ContractError, NumericError
from arenvq.metrics import mae_over_sigma
from arenvq.params import AdamState, adam_step
from arenvq.util import derive_seed

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "checkpoint.arenckpt"
CONFIG_NAME = "effective.ini"
CODEBOOK_SUFFIX = ".embeddings"


def model_input(img, mask, mask_input):
    """The corrupted RGB batch, with the mask appended as a fourth channel if needed."""
    if not mask_input:
        return img
    if mask is None:
        raise ContractError("This model takes the mask as a fourth channel, but none was given")
    return np.concatenate([img, mask.astype(img.dtype)], axis=-1)


def reconstruct_batches(model, corrupted, mask, mask_input, batch_size):
    recons = []
    for start in range(0, len(corrupted), batch_size):
        stop = start + batch_size
        batch = model_input(corrupted[start:stop],
            None if mask is None else mask[start:stop], mask_input)
        recons.append(model.reconstruct(batch))
    return np.concatenate(recons)


def l1_loss(recon, target):
    return T.mean(T.absolute(T.sub(recon, target)))


def _check_finite(losses, step):
    for name, value in losses.items():
        if not np.isfinite(value):
            raise NumericError("{} loss is {}".format(name, value), step)


class Trainer(object):
    """
    Owns the model, the discriminator, both Adam states and the position in
    the run (step, epoch, batch within the epoch).
    """

    def __init__(self, config, dataset, checkpoint=None):
        self.config = config
        self.dataset = dataset
        self.spec = config.task.degrade_spec().validate()
        if checkpoint is None:
            self.model = AttentiveVQVAE.from_run_config(config)
            self.discriminator = PatchDiscriminator.from_run_config(config)
            self.gen_adam = AdamState(lr=config.train.lr)
            self.disc_adam = AdamState(lr=config.train.lr)
            self.step = self.epoch = self.batch = 0
        else:
            self.model = checkpoint.build_model()
            self.discriminator = (checkpoint.build_discriminator()
                or PatchDiscriminator.from_run_config(config))
            self.gen_adam = checkpoint.adam_state("gen")
            self.disc_adam = checkpoint.adam_state("disc")
            self.step = checkpoint.step
            self.epoch = checkpoint.epoch
            self.batch = checkpoint.batch
            logger.info("Resuming at step %d (epoch %d, batch %d)",
                self.step, self.epoch, self.batch)
        self.gen_adam.lr_scales = {CODEBOOK_SUFFIX: config.train.codebook_lr_scale}
        self.sigma = dataset.pixel_std()
        logger.info("Training pixel std: %.6f", self.sigma)
        self.history = []

    @property
    def dtype(self):
        return self.model.params.dtype

    @property
    def checkpoint_path(self):
        return os.path.join(self.config.output_dir, CHECKPOINT_NAME)

    def corrupt(self, clean, step):
        """Corrupt a batch with a seed unique to the step."""
        return self.spec.apply(clean, derive_seed(self.spec.seed, step))

    @property
    def adversarial(self):
        return self.config.train.adv_weight > 0

    def train_step(self, clean):
        """
        One generator update then one discriminator update. Returns the losses.

        With adv_weight = 0 the discriminator is left alone and its losses
        are reported as 0.
        """
        cfg = self.config.train
        clean = np.asarray(clean, dtype=self.dtype)
        corrupted, mask = self.corrupt(clean, self.step)
        x = T.Tensor(model_input(corrupted, mask, self.config.mask_input), dtype=self.dtype)
        target = T.Tensor(clean, dtype=self.dtype)

        self.model.train()
        self.discriminator.train()
        result = self.model(x)
        l1 = l1_loss(result.recon, target)
        vq = result.vq_loss()
        loss = l1 + vq
        losses = collections.OrderedDict([("L1", l1.item()), ("VQ", vq.item())])
        g_adv_value = d_loss_value = 0.0
        if self.adversarial:
            g_adv = generator_loss(self.discriminator(result.recon))
            loss = loss + g_adv * cfg.adv_weight
            g_adv_value = losses["Generator"] = g_adv.item()
        _check_finite(losses, self.step)
        loss.backward()
        adam_step(self.model.params, self.gen_adam)

        if self.adversarial:
            self.discriminator.params.zero_grad()
            d_loss = discriminator_loss(self.discriminator(target),
                self.discriminator(T.stop_gradient(result.recon)))
            d_loss_value = d_loss.item()
            _check_finite({"Discriminator": d_loss_value}, self.step)
            d_loss.backward()
            adam_step(self.discriminator.params, self.disc_adam)

        self.step += 1
        return collections.OrderedDict([
            ("loss", loss.item()),
            ("l1", losses["L1"]),
            ("vq", losses["VQ"]),
            ("g_adv", g_adv_value),
            ("d_loss", d_loss_value),
        ])

    def _finished(self):
        max_steps = self.config.train.max_steps
        return max_steps and self.step >= max_steps

    def _epochs(self):
        epoch = self.epoch
        while self.config.train.epochs == 0 or epoch < self.config.train.epochs:
            yield epoch
            epoch += 1

    def save(self):
        save_checkpoint(self.model, self.checkpoint_path, self.config,
            discriminator=self.discriminator,
            optimizers={"gen": self.gen_adam, "disc": self.disc_adam},
            progress={"step": self.step, "epoch": self.epoch, "batch": self.batch})

    def run(self, save=True):
        """Train until the epoch or step limit. Returns per-epoch statistics."""
        if save:
            os.makedirs(self.config.output_dir, exist_ok=True)
            write_config(self.config, os.path.join(self.config.output_dir, CONFIG_NAME))

        batch_size = self.config.train.batch_size
        saved_step = self.step
        for epoch in self._epochs():
            if self._finished():
                break
            started = time.perf_counter()
            self.model.reset_usage()
            self.model.set_instrumented(True)
            totals = collections.defaultdict(float)
            steps = 0
            for b, clean in enumerate(self.dataset.batches("train", batch_size, epoch)):
                if b < self.batch:
                    continue
                if self._finished():
                    break
                for name, value in self.train_step(clean).items():
                    totals[name] += value
                steps += 1
                self.batch = b + 1
            self.model.set_instrumented(False)

            complete = not self._finished() or self.batch >= self._batches_per_epoch()
            if complete:
                self.epoch = epoch + 1
                self.batch = 0
            if steps:
                self._log_epoch(epoch, steps, totals, time.perf_counter() - started)
            if save and (self.epoch % self.config.train.save_every == 0 or self._finished()):
                self.save()
                saved_step = self.step
        if save and saved_step != self.step:
            self.save()
        return self.history

    def _batches_per_epoch(self):
        count = len(self.dataset.train_indices)
        return -(-count // self.config.train.batch_size)

    def _log_epoch(self, epoch, steps, totals, seconds):
        stats = collections.OrderedDict(
            (name, total / steps) for name, total in totals.items())
        stats["mae_over_sigma"] = stats["l1"] / self.sigma
        stats["active"] = self.model.active_counts()
        stats["seconds"] = seconds
        stats["epoch"] = epoch
        stats["steps"] = steps
        self.history.append(stats)
        logger.info(
            "Epoch %d: %d steps, loss %.5f, L1 %.5f, VQ %.5f, G %.5f, D %.5f, "
            "MAE/sigma %.4f, active %s, %.1f s",
            epoch, steps, stats["loss"], stats["l1"], stats["vq"], stats["g_adv"],
            stats["d_loss"], stats["mae_over_sigma"], stats["active"], seconds)

    def mae_over_sigma(self, name="train"):
        """Eval-mode MAE/sigma on a split, corrupted with the task seed."""
        clean = self.dataset.subset(name)
        corrupted, mask = self.spec.apply(clean)
        recons = reconstruct_batches(self.model, corrupted, mask, self.config.mask_input,
            self.config.train.batch_size)
        return mae_over_sigma(recons, clean, self.sigma)
