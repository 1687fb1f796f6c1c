from django.urls import path
from . import views

app_name = "reports"

urlpatterns = [
    # CSV exports
    path("runs.csv", views.export_runs_csv, name="export_runs_csv"),
    path("runs/<int:pk>/energy.csv", views.export_energy_csv, name="export_energy_csv"),

    # Excel exports
    path("runs/<int:pk>/energy.xlsx", views.export_energy_xlsx, name="export_energy_xlsx"),
]
