from django.db import models
from django.utils import timezone

from apps.core.constants import MODEL_CHOICES


class ExperimentRun(models.Model):
    STATUS_RUNNING = "running"
    STATUS_COMPLETED = "completed"
    STATUS_FAILED = "failed"
    STATUS_CHOICES = [
        (STATUS_RUNNING, "Running"),
        (STATUS_COMPLETED, "Completed"),
        (STATUS_FAILED, "Failed"),
    ]

    name = models.CharField(max_length=120)
    model = models.CharField(max_length=20, choices=MODEL_CHOICES)
    config_text = models.TextField()
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default=STATUS_RUNNING)

    steps = models.PositiveIntegerField(default=0)
    reason = models.CharField(max_length=40, blank=True)
    initial_energy = models.FloatField(null=True, blank=True)
    final_energy = models.FloatField(null=True, blank=True)
    min_s = models.FloatField(null=True, blank=True)

    output_dir = models.CharField(max_length=500)
    report = models.JSONField(default=dict, blank=True)
    error = models.TextField(blank=True)

    created_at = models.DateTimeField(auto_now_add=True)
    finished_at = models.DateTimeField(null=True, blank=True)

    class Meta:
        ordering = ["-created_at"]
        indexes = [
            models.Index(fields=["name", "created_at"], name="run_name_created_idx"),
            models.Index(fields=["status"], name="run_status_idx"),
        ]

    def __str__(self):
        return f"{self.name} ({self.model}, {self.status})"

    def finish(self, status, **fields):
        for key, value in fields.items():
            setattr(self, key, value)
        self.status = status
        self.finished_at = timezone.now()
        self.save()


class EnergyRecord(models.Model):
    """One recorded flow step; the columns mirror energy.csv."""

    run = models.ForeignKey(ExperimentRun, on_delete=models.CASCADE, related_name="energy_records")
    step = models.PositiveIntegerField()

    e_main = models.FloatField()
    e_bulk = models.FloatField()
    e_anchor = models.FloatField(default=0.0)
    e_electric = models.FloatField(default=0.0)
    e_total = models.FloatField()
    ds_norm = models.FloatField(null=True, blank=True)
    min_s = models.FloatField(null=True, blank=True)
    tangent_norm = models.FloatField(null=True, blank=True)

    class Meta:
        ordering = ["run", "step"]
        constraints = [
            models.UniqueConstraint(fields=["run", "step"], name="unique_energy_record_step"),
        ]

    def __str__(self):
        return f"{self.run.name} step {self.step}: {self.e_total:.10g}"
