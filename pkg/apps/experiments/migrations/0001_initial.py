# Generated by Django 4.2.27 on 2026-10-17 09:12

from django.db import migrations, models
import django.db.models.deletion


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('name', models.CharField(max_length=120)),
                ('model', models.CharField(choices=[('ericksen', 'One-constant Ericksen'), ('uniaxial_ldg', 'Uniaxially constrained Landau-deGennes'), ('standard_ldg', 'Standard Landau-deGennes')], max_length=20)),
                ('config_text', models.TextField()),
                ('status', models.CharField(choices=[('running', 'Running'), ('completed', 'Completed'), ('failed', 'Failed')], default='running', max_length=20)),
                ('steps', models.PositiveIntegerField(default=0)),
                ('reason', models.CharField(blank=True, max_length=40)),
                ('initial_energy', models.FloatField(blank=True, null=True)),
                ('final_energy', models.FloatField(blank=True, null=True)),
                ('min_s', models.FloatField(blank=True, null=True)),
                ('output_dir', models.CharField(max_length=500)),
                ('report', models.JSONField(blank=True, default=dict)),
                ('error', models.TextField(blank=True)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('finished_at', models.DateTimeField(blank=True, null=True)),
            ],
            options={
                'ordering': ['-created_at'],
                'indexes': [models.Index(fields=['name', 'created_at'], name='run_name_created_idx'), models.Index(fields=['status'], name='run_status_idx')],
            },
        ),
        migrations.CreateModel(
            name='EnergyRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('step', models.PositiveIntegerField()),
                ('e_main', models.FloatField()),
                ('e_bulk', models.FloatField()),
                ('e_anchor', models.FloatField(default=0.0)),
                ('e_electric', models.FloatField(default=0.0)),
                ('e_total', models.FloatField()),
                ('ds_norm', models.FloatField(blank=True, null=True)),
                ('min_s', models.FloatField(blank=True, null=True)),
                ('tangent_norm', models.FloatField(blank=True, null=True)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='energy_records', to='experiments.experimentrun')),
            ],
            options={
                'ordering': ['run', 'step'],
            },
        ),
        migrations.AddConstraint(
            model_name='energyrecord',
            constraint=models.UniqueConstraint(fields=('run', 'step'), name='unique_energy_record_step'),
        ),
    ]
