from django.contrib import admin

from .models import EnergyRecord, ExperimentRun


class EnergyRecordInline(admin.TabularInline):
    model = EnergyRecord
    extra = 0
    fields = ("step", "e_main", "e_bulk", "e_anchor", "e_electric", "e_total", "ds_norm", "min_s")
    readonly_fields = fields
    can_delete = False


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = ("name", "model", "status", "steps", "reason", "initial_energy", "final_energy", "min_s", "created_at")
    list_filter = ("model", "status", "created_at")
    search_fields = ("name", "output_dir", "config_text", "error")
    readonly_fields = ("created_at", "finished_at")
    inlines = [EnergyRecordInline]


@admin.register(EnergyRecord)
class EnergyRecordAdmin(admin.ModelAdmin):
    list_display = ("run", "step", "e_total", "e_main", "e_bulk", "ds_norm", "min_s")
    list_filter = ("run__model",)
    search_fields = ("run__name",)
